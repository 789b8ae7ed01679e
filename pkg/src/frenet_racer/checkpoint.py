"""
Versioned binary checkpoint container.

Layout (all integers little-endian)::

    offset  size  field
    0       8     magic  b"FRNRCKPT"
    8       4     uint32 format version (currently 1)
    12      8     uint64 header length H in bytes
    20      H     UTF-8 JSON header
    20+H    ...   payload: arrays back to back, little-endian float64, C order

The header holds ``arrays`` (a list of ``{"name", "shape"}`` in payload
order), ``networks`` (layer sizes and output activation per network),
``optimizers`` (Adam hyper-parameters and step count ``t`` per optimizer,
whose first/second moments are stored as arrays named
``opt.<name>.m<k>`` / ``opt.<name>.v<k>``), ``step`` (training steps
taken) and ``config`` (the full run configuration).  Network parameters
are stored as ``<network>.W<i>`` and ``<network>.b<i>``.
"""

from __future__ import annotations

import json
import os
import struct
from pathlib import Path
from typing import Any

import numpy as np

from .nn import Adam, Mlp
from .td3 import Td3Agent, Td3Config

MAGIC = b"FRNRCKPT"
VERSION = 1
_PREFIX = struct.Struct("<8sIQ")


class CheckpointError(ValueError):
    pass


def _network_arrays(name: str, net: Mlp):
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        yield f"{name}.W{i}", w
        yield f"{name}.b{i}", b


def save_checkpoint(path: str | os.PathLike, agent: Td3Agent, step: int, config: dict[str, Any]) -> None:
    arrays: list[tuple[str, np.ndarray]] = []
    networks = {}
    for name, net in agent.networks().items():
        networks[name] = {"sizes": list(net.sizes), "output_activation": net.output_activation}
        arrays.extend(_network_arrays(name, net))
    optimizers = {}
    for name, opt in agent.optimizers().items():
        optimizers[name] = {"lr": opt.lr, "beta1": opt.beta1, "beta2": opt.beta2,
                            "eps": opt.eps, "t": opt.t}
        arrays.extend((f"opt.{name}.m{k}", m) for k, m in enumerate(opt.m))
        arrays.extend((f"opt.{name}.v{k}", v) for k, v in enumerate(opt.v))
    header = {
        "arrays": [{"name": n, "shape": list(a.shape)} for n, a in arrays],
        "networks": networks,
        "optimizers": optimizers,
        "obs_dim": agent.obs_dim,
        "act_dim": agent.act_dim,
        "update_count": agent.update_count,
        "step": int(step),
        "config": config,
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with tmp.open("wb") as fh:
        fh.write(_PREFIX.pack(MAGIC, VERSION, len(blob)))
        fh.write(blob)
        for _, a in arrays:
            fh.write(np.ascontiguousarray(a, dtype="<f8").tobytes())
    os.replace(tmp, path)


def read_checkpoint(path: str | os.PathLike) -> tuple[dict[str, Any], dict[str, np.ndarray]]:
    """Parse a checkpoint into its header and a name -> array mapping."""
    data = Path(path).read_bytes()
    if len(data) < _PREFIX.size:
        raise CheckpointError("file too short for a checkpoint")
    magic, version, hlen = _PREFIX.unpack_from(data)
    if magic != MAGIC:
        raise CheckpointError("not a frenet_racer checkpoint (bad magic)")
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    start = _PREFIX.size
    header = json.loads(data[start:start + hlen].decode("utf-8"))
    offset = start + hlen
    arrays = {}
    for entry in header["arrays"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape, dtype=np.int64))
        nbytes = 8 * count
        if offset + nbytes > len(data):
            raise CheckpointError(f"payload truncated at array {entry['name']}")
        arrays[entry["name"]] = np.frombuffer(data, dtype="<f8", count=count, offset=offset).reshape(shape).astype(np.float64)
        offset += nbytes
    if offset != len(data):
        raise CheckpointError("trailing bytes after payload")
    return header, arrays


def _load_network(name: str, spec: dict, arrays: dict[str, np.ndarray]) -> Mlp:
    n_layers = len(spec["sizes"]) - 1
    weights = [arrays[f"{name}.W{i}"] for i in range(n_layers)]
    biases = [arrays[f"{name}.b{i}"] for i in range(n_layers)]
    return Mlp(tuple(spec["sizes"]), weights, biases, spec["output_activation"])


def load_agent(path: str | os.PathLike) -> tuple[Td3Agent, dict[str, Any]]:
    """Rebuild a :class:`Td3Agent` (networks and optimizer state) from disk."""
    header, arrays = read_checkpoint(path)
    td3_cfg = Td3Config(**header["config"].get("td3", {}))
    agent = Td3Agent.__new__(Td3Agent)
    agent.cfg = td3_cfg
    agent.obs_dim = header["obs_dim"]
    agent.act_dim = header["act_dim"]
    agent.update_count = header["update_count"]
    for name, spec in header["networks"].items():
        setattr(agent, name, _load_network(name, spec, arrays))
    for name, spec in header["optimizers"].items():
        net = getattr(agent, name)
        params = net.params()
        opt = Adam(params, lr=spec["lr"], beta1=spec["beta1"], beta2=spec["beta2"], eps=spec["eps"],
                   t=spec["t"],
                   m=[arrays[f"opt.{name}.m{k}"] for k in range(len(params))],
                   v=[arrays[f"opt.{name}.v{k}"] for k in range(len(params))])
        setattr(agent, f"{name}_opt", opt)
    return agent, header
