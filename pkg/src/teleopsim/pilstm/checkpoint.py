"""Versioned JSON checkpoints with bit-exact weight round trip.

JSON float serialization uses shortest round-trip repr, so every double
survives save/load unchanged; arrays are stored flat row-major with
their declared shapes.
"""

from __future__ import annotations

import dataclasses
import json
from pathlib import Path

import numpy as np

from ..errors import ParseError, TopologyError
from .network import LstmLayerParams, ModelParams, NetworkTopology
from .scaling import Scaler

FORMAT = "teleopsim-model"
VERSION = 1


def save_checkpoint(path, params: ModelParams, scaler: Scaler,
                    train_config=None, log=None, metrics: dict | None = None) -> None:
    topo = params.topology
    weights = {}
    for name, arr in params.items():
        weights[name] = {"shape": list(arr.shape), "data": arr.ravel().tolist()}
    doc = {
        "format": FORMAT,
        "version": VERSION,
        "topology": {
            "input_len": topo.input_len, "dense_units": topo.dense_units,
            "lstm_depth": topo.lstm_depth, "lstm_units": topo.lstm_units,
        },
        "weights": weights,
        "scaler": scaler.to_dict(),
        "train_config": dataclasses.asdict(train_config) if train_config else None,
        "log": log.to_dict() if log is not None else None,
        "metrics": metrics or {},
    }
    Path(path).write_text(json.dumps(doc))


def load_checkpoint(path):
    """Returns (params, scaler, meta) where meta carries config/log/metrics."""
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise ParseError(f"checkpoint {path}: {e.msg}", line=e.lineno) from e
    if doc.get("format") != FORMAT:
        raise ParseError(f"checkpoint {path}: not a {FORMAT} file")
    if doc.get("version") != VERSION:
        raise ParseError(f"checkpoint {path}: unsupported version {doc.get('version')}")

    t = doc["topology"]
    topo = NetworkTopology(
        input_len=t["input_len"], dense_units=t["dense_units"],
        lstm_depth=t["lstm_depth"], lstm_units=t["lstm_units"],
    )

    def arr(name, expect_shape):
        w = doc["weights"].get(name)
        if w is None:
            raise ParseError(f"checkpoint {path}: missing weight {name}")
        a = np.array(w["data"], dtype=float).reshape(w["shape"])
        if tuple(a.shape) != expect_shape:
            raise TopologyError(
                f"checkpoint {path}: {name} has shape {a.shape}, expected {expect_shape}"
            )
        return a

    m, l, nf = topo.dense_units, topo.lstm_units, 4
    layers = []
    for j in range(topo.lstm_depth):
        in_dim = m if j == 0 else l
        kw = {}
        for g in LstmLayerParams.GATES:
            kw[f"W_{g}"] = arr(f"lstm{j}.W_{g}", (l, in_dim))
            kw[f"U_{g}"] = arr(f"lstm{j}.U_{g}", (l, l))
            kw[f"b_{g}"] = arr(f"lstm{j}.b_{g}", (l,))
        layers.append(LstmLayerParams(**kw))
    params = ModelParams(
        topology=topo,
        W_in=arr("W_in", (m, nf)), b_in=arr("b_in", (m,)),
        layers=layers,
        W_out=arr("W_out", (1, l)), b_out=arr("b_out", (1,)),
    )
    scaler = Scaler.from_dict(doc["scaler"])
    meta = {
        "train_config": doc.get("train_config"),
        "log": doc.get("log"),
        "metrics": doc.get("metrics", {}),
    }
    return params, scaler, meta


__all__ = ["save_checkpoint", "load_checkpoint", "FORMAT", "VERSION"]
