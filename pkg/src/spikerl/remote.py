"""Newline-delimited JSON protocol for attaching external environments.

One message per line, responses in request order:

    {"cmd": "spec"}                  -> {"n": int, "m": int, "low": [...], "high": [...]}
    {"cmd": "reset", "seed": int}    -> {"obs": [...]}
    {"cmd": "step", "action": [...]} -> {"obs": [...], "reward": real, "done": bool}
    {"cmd": "close"}                 -> {"ok": true}

Recoverable problems (malformed line, wrong action arity, stepping a
finished episode) produce {"error": {"type": ..., "message": ...}} and the
connection stays usable. The same protocol runs over a stdio pipe pair or a
TCP socket; a remote handle satisfies the same reset/step contract as the
built-in environments.
"""

from __future__ import annotations

import json
import shlex
import socket
import subprocess
import sys

import numpy as np

from .actor import EnvSpec
from .errors import (
    ContractViolation,
    DimensionMismatch,
    MalformedMessage,
    ProtocolError,
    ProtocolTimeout,
)

# external gym-style environments are assumed to cap episodes themselves
EXTERNAL_EPISODE_CAP = 1000


def _error_doc(err_type: str, message: str) -> dict:
    return {"error": {"type": err_type, "message": message}}


def env_serve(env, rfile, wfile) -> None:
    """Serve one environment over a (readable, writable) text-stream pair."""

    def send(doc: dict) -> None:
        wfile.write(json.dumps(doc) + "\n")
        wfile.flush()

    for line in rfile:
        line = line.strip()
        if not line:
            continue
        try:
            msg = json.loads(line)
            if not isinstance(msg, dict):
                raise ValueError("message must be an object")
        except ValueError as exc:
            send(_error_doc("malformed", str(exc)))
            continue
        cmd = msg.get("cmd")
        if cmd == "spec":
            send({"n": env.spec.n, "m": env.spec.m,
                  "low": [float(x) for x in env.spec.action_low],
                  "high": [float(x) for x in env.spec.action_high]})
        elif cmd == "reset":
            seed = msg.get("seed")
            if not isinstance(seed, int):
                send(_error_doc("malformed", "reset requires an integer seed"))
                continue
            obs = env.reset(seed=seed)
            send({"obs": [float(x) for x in obs]})
        elif cmd == "step":
            action = msg.get("action")
            if not isinstance(action, list) or len(action) != env.spec.m:
                send(_error_doc(
                    "dimension_mismatch",
                    f"step needs an action of length {env.spec.m}"))
                continue
            try:
                obs, reward, done = env.step(np.asarray(action, dtype=np.float64))
            except ContractViolation as exc:
                send(_error_doc("contract", str(exc)))
                continue
            send({"obs": [float(x) for x in obs], "reward": float(reward),
                  "done": bool(done)})
        elif cmd == "close":
            send({"ok": True})
            return
        else:
            send(_error_doc("malformed", f"unknown command {cmd!r}"))


def serve_stdio(env) -> None:
    env_serve(env, sys.stdin, sys.stdout)


def serve_tcp(env, host: str, port: int, max_connections: int | None = None) -> None:
    """Accept connections one at a time, serving each until its close."""
    served = 0
    with socket.create_server((host, port)) as server:
        while max_connections is None or served < max_connections:
            conn, _ = server.accept()
            with conn:
                rfile = conn.makefile("r", encoding="utf-8")
                wfile = conn.makefile("w", encoding="utf-8")
                env_serve(env, rfile, wfile)
            served += 1


class RemoteEnv:
    """Client handle; observationally equivalent to the environment it wraps."""

    episode_cap = EXTERNAL_EPISODE_CAP

    def __init__(self, rfile, wfile, closer=None, timeout_note: str = ""):
        self._rfile = rfile
        self._wfile = wfile
        self._closer = closer
        self._timeout_note = timeout_note
        self.spec = self._handshake()

    def _request(self, doc: dict) -> dict:
        try:
            self._wfile.write(json.dumps(doc) + "\n")
            self._wfile.flush()
            line = self._rfile.readline()
        except (TimeoutError, socket.timeout) as exc:
            raise ProtocolTimeout(f"environment did not answer{self._timeout_note}") from exc
        if not line:
            raise ProtocolError("environment closed the connection")
        try:
            resp = json.loads(line)
            if not isinstance(resp, dict):
                raise ValueError("response must be an object")
        except ValueError as exc:
            raise MalformedMessage(f"unparseable response: {line!r}") from exc
        if "error" in resp:
            err = resp["error"]
            err_type = err.get("type", "protocol")
            message = err.get("message", "remote error")
            if err_type == "dimension_mismatch":
                raise DimensionMismatch(message)
            if err_type == "malformed":
                raise MalformedMessage(message)
            raise ProtocolError(f"{err_type}: {message}")
        return resp

    def _handshake(self) -> EnvSpec:
        resp = self._request({"cmd": "spec"})
        try:
            return EnvSpec(n=int(resp["n"]), m=int(resp["m"]),
                           action_low=resp["low"], action_high=resp["high"])
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedMessage(f"bad spec response: {resp!r}") from exc

    def reset(self, seed: int | None = None) -> np.ndarray:
        resp = self._request({"cmd": "reset", "seed": int(seed or 0)})
        obs = np.asarray(resp.get("obs"), dtype=np.float64)
        if obs.shape != (self.spec.n,):
            raise DimensionMismatch(f"reset returned obs of shape {obs.shape}")
        return obs

    def step(self, action) -> tuple[np.ndarray, float, bool]:
        action = np.asarray(action, dtype=np.float64).reshape(-1)
        resp = self._request({"cmd": "step", "action": [float(x) for x in action]})
        try:
            obs = np.asarray(resp["obs"], dtype=np.float64)
            reward = float(resp["reward"])
            done = bool(resp["done"])
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedMessage(f"bad step response: {resp!r}") from exc
        if obs.shape != (self.spec.n,):
            raise DimensionMismatch(f"step returned obs of shape {obs.shape}")
        return obs, reward, done

    def close(self) -> None:
        try:
            self._request({"cmd": "close"})
        except ProtocolError:
            pass
        if self._closer is not None:
            self._closer()


def env_connect(address: str, timeout: float = 30.0) -> RemoteEnv:
    """Open a remote environment.

    ``tcp://host:port`` connects a socket; ``cmd://<shell command>`` spawns
    the command and talks over its stdio.
    """
    if address.startswith("tcp://"):
        host, _, port = address[len("tcp://"):].rpartition(":")
        try:
            sock = socket.create_connection((host, int(port)), timeout=timeout)
        except (OSError, ValueError) as exc:
            raise ProtocolError(f"cannot connect to {address}: {exc}") from exc
        sock.settimeout(timeout)
        rfile = sock.makefile("r", encoding="utf-8")
        wfile = sock.makefile("w", encoding="utf-8")
        return RemoteEnv(rfile, wfile, closer=sock.close, timeout_note=f" from {address}")
    if address.startswith("cmd://"):
        argv = shlex.split(address[len("cmd://"):])
        proc = subprocess.Popen(argv, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
                                text=True)
        return RemoteEnv(proc.stdout, proc.stdin, closer=proc.terminate,
                         timeout_note=f" from {argv[0]}")
    raise ProtocolError(
        f"unsupported environment address {address!r}; use tcp://host:port or cmd://..."
    )
