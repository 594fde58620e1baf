"""Firing-rate measurement, synaptic-operation counting, and energy estimation.

Operation accounting follows the standard neuromorphic convention: a
fully-connected layer fed by spiking neurons costs

    SOP = round(T * fr_in * Dim_in * Dim_out)

synaptic operations per inference, where fr_in is the average firing rate of
the neuronal layer in front of it, while a layer fed by real values costs
Dim_in * Dim_out floating-point operations. Energy uses per-operation costs
of reference hardware: 77 fJ per SOP (neuromorphic chip) and 12.5 pJ per
FLOP (FPGA).

The decoder group layer of the firing-rate baseline actor is a special
case: its input is the real-valued firing rate, so its operations count as
FLOPs even though they are driven by spike statistics over T steps.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .actor import SpikingActorParams, forward
from .errors import ContractViolation

E_SOP_NJ = 77e-6    # 77 fJ per synaptic operation
E_FLOP_NJ = 12.5e-3  # 12.5 pJ per floating-point operation

SOP = "SOP"
FLOP = "FLOP"

KIND_SNN = "snn"           # spike input -> SOP
KIND_DENSE = "dense"       # real input, one pass -> FLOP
KIND_FR_DENSE = "fr_dense"  # real firing-rate input, T-step accounting -> FLOP

# audit-only task presets: (state dim, action dim)
TASK_PRESETS = {
    "ant": (111, 8),
    "halfcheetah": (17, 6),
    "hopper": (11, 3),
    "walker2d": (17, 6),
    "humanoid": (376, 17),
    "humanoidstandup": (376, 17),
    "inverteddoublependulum": (11, 1),
    "bipedalwalker": (24, 4),
}


@dataclass
class LayerArch:
    """One synaptic layer; ``groups`` parallel (dim_in, dim_out) blocks."""

    name: str
    dim_in: int
    dim_out: int
    kind: str
    groups: int = 1

    @property
    def synapses(self) -> int:
        return self.groups * self.dim_in * self.dim_out


def spiking_actor_arch(n: int, m: int, p_in: int = 10, p_out: int = 10,
                       hidden: tuple[int, ...] = (256, 256)) -> list[LayerArch]:
    widths = [n * p_in, *hidden, m * p_out]
    layers = [LayerArch(f"FC{i + 1}", widths[i], widths[i + 1], KIND_SNN)
              for i in range(len(widths) - 1)]
    layers.append(LayerArch("GroupFC", p_out, 1, KIND_SNN, groups=m))
    layers.append(LayerArch("IntraFC", p_out, p_out, KIND_SNN, groups=m))
    return layers


def popsan_arch(n: int, m: int, p_in: int = 10, p_out: int = 10,
                hidden: tuple[int, ...] = (256, 256)) -> list[LayerArch]:
    widths = [n * p_in, *hidden, m * p_out]
    layers = [LayerArch(f"FC{i + 1}", widths[i], widths[i + 1], KIND_SNN)
              for i in range(len(widths) - 1)]
    layers.append(LayerArch("GroupFC", p_out, 1, KIND_FR_DENSE, groups=m))
    return layers


def dan_arch(n: int, m: int, hidden: tuple[int, ...] = (256, 256)) -> list[LayerArch]:
    widths = [n, *hidden, m]
    return [LayerArch(f"FC{i + 1}", widths[i], widths[i + 1], KIND_DENSE)
            for i in range(len(widths) - 1)]


@dataclass
class FiringReport:
    """Average input-side firing rate per synaptic layer over one episode."""

    rates: dict[str, float]
    t_len: int
    episode_steps: int
    layer_dims: dict[str, tuple[int, int, int]] = field(default_factory=dict)

    def __post_init__(self):
        for name, fr in self.rates.items():
            if not (0.0 <= fr <= 1.0):
                raise ContractViolation(f"firing rate of {name} out of [0, 1]: {fr}")


def record_firing_rates(params: SpikingActorParams, env, seed: int) -> FiringReport:
    """Deterministic one-episode rollout counting every layer's input spikes.

    The decoder group layer sees output spikes from all T steps; the
    recurrent intra layer only from steps 1..T-1, since the last step's
    spikes never feed a next-step current.
    """
    t_len = params.t_len
    n_layers = len(params.weights)
    names = [f"FC{i + 1}" for i in range(n_layers)] + ["GroupFC", "IntraFC"]
    spike_sums = {name: 0.0 for name in names}
    obs = env.reset(seed=seed)
    done = False
    steps = 0
    while not done and steps < env.episode_cap:
        action, trace = forward(obs, params, record=True)
        # FC1 input: the encoder raster
        spike_sums["FC1"] += float(trace.raster.sum())
        for layer in range(1, n_layers):
            spike_sums[f"FC{layer + 1}"] += sum(
                float(trace.spikes[t][layer - 1].sum()) for t in range(t_len))
        last = [trace.spikes[t][n_layers - 1] for t in range(t_len)]
        spike_sums["GroupFC"] += sum(float(s.sum()) for s in last)
        spike_sums["IntraFC"] += sum(float(s.sum()) for s in last[:-1])
        obs, _, done = env.step(action)
        steps += 1

    widths = [params.encoder.out_width(params.env.n)] + [w.shape[0] for w in params.weights]
    denom = {f"FC{i + 1}": widths[i] * t_len for i in range(n_layers)}
    denom["GroupFC"] = widths[-1] * t_len
    denom["IntraFC"] = widths[-1] * (t_len - 1) if t_len > 1 else widths[-1]
    rates = {name: spike_sums[name] / (denom[name] * steps) for name in names}
    dims = {f"FC{i + 1}": (widths[i], widths[i + 1], 1) for i in range(n_layers)}
    dims["GroupFC"] = (params.p_out, 1, params.env.m)
    dims["IntraFC"] = (params.p_out, params.p_out, params.env.m)
    return FiringReport(rates=rates, t_len=t_len, episode_steps=steps, layer_dims=dims)


@dataclass
class OpRow:
    name: str
    dim_in: int
    dim_out: int
    groups: int
    kind: str   # SOP or FLOP
    count: int


@dataclass
class OpReport:
    rows: list[OpRow]

    def total(self, kind: str) -> int:
        return sum(row.count for row in self.rows if row.kind == kind)

    @property
    def total_sop(self) -> int:
        return self.total(SOP)

    @property
    def total_flop(self) -> int:
        return self.total(FLOP)


def count_ops(arch: list[LayerArch], fr: FiringReport | dict[str, float] | None,
              t_len: int) -> OpReport:
    """Per-layer operation counts for an architecture at simulation length T."""
    rates = fr.rates if isinstance(fr, FiringReport) else (fr or {})
    rows = []
    for layer in arch:
        if layer.kind == KIND_DENSE:
            count, kind = layer.synapses, FLOP
        else:
            if layer.name not in rates:
                raise ContractViolation(
                    f"no firing rate recorded for spiking-input layer {layer.name!r}"
                )
            # nearest integer, halves away from zero
            count = int(np.floor(t_len * rates[layer.name] * layer.synapses + 0.5))
            kind = SOP if layer.kind == KIND_SNN else FLOP
        rows.append(OpRow(name=layer.name, dim_in=layer.dim_in, dim_out=layer.dim_out,
                          groups=layer.groups, kind=kind, count=count))
    return OpReport(rows=rows)


@dataclass
class EnergyReport:
    total_sop: int
    total_flop: int
    energy_nj: float

    @property
    def energy_nj_rounded(self) -> float:
        return round(self.energy_nj, 1)


def estimate_energy(ops: OpReport) -> EnergyReport:
    energy = E_SOP_NJ * ops.total_sop + E_FLOP_NJ * ops.total_flop
    return EnergyReport(total_sop=ops.total_sop, total_flop=ops.total_flop,
                        energy_nj=energy)


def apr(results: dict[str, tuple[float, float]]) -> float:
    """Average performance ratio in percent: mean over tasks of score/baseline."""
    if not results:
        raise ContractViolation("apr needs at least one task")
    ratios = []
    for task, (an, dan) in results.items():
        if dan == 0:
            raise ContractViolation(f"baseline score for task {task!r} is zero")
        ratios.append(an / dan)
    return 100.0 * float(np.mean(ratios))


def firing_csv(report: FiringReport) -> str:
    lines = ["layer,dim_in,dim_out,groups,fr_in"]
    for name, fr in report.rates.items():
        din, dout, groups = report.layer_dims.get(name, (0, 0, 1))
        lines.append(f"{name},{din},{dout},{groups},{fr!r}")
    return "\n".join(lines) + "\n"


def ops_csv(report: OpReport) -> str:
    lines = ["layer,dim_in,dim_out,groups,kind,count"]
    for row in report.rows:
        lines.append(f"{row.name},{row.dim_in},{row.dim_out},{row.groups},{row.kind},{row.count}")
    lines.append(f"total,,,,SOP,{report.total_sop}")
    lines.append(f"total,,,,FLOP,{report.total_flop}")
    return "\n".join(lines) + "\n"
