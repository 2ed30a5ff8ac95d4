#!/usr/bin/env python3
"""
Deterministic artifact output: CSV and JSON serialisation, a buffered writer
that commits only after a command succeeds, and the run manifest.
"""

from __future__ import annotations

import hashlib
import io
import json
import logging
import os
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np
import pandas as pd

from config import VERSION
from errors import ArtifactDrift

logger = logging.getLogger(__name__)

MANIFEST_NAME = 'manifest.json'


def _to_builtin(value):
    if isinstance(value, dict):
        return {str(k): _to_builtin(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_to_builtin(v) for v in value]
    if isinstance(value, np.ndarray):
        return _to_builtin(value.tolist())
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        return _finite_or_none(float(value))
    if isinstance(value, complex):
        return [value.real, value.imag]
    if isinstance(value, float):
        return _finite_or_none(value)
    if isinstance(value, (np.bool_,)):
        return bool(value)
    return value


def _finite_or_none(value: float):
    return value if np.isfinite(value) else None


def csv_bytes(frame: pd.DataFrame) -> bytes:
    buffer = io.StringIO()
    frame.to_csv(buffer, index=False, float_format='%.17g', lineterminator='\n')
    return buffer.getvalue().encode('utf-8')


def json_bytes(payload) -> bytes:
    return (json.dumps(_to_builtin(payload), indent=2, sort_keys=True) + '\n').encode('utf-8')


def _write_bytes(path: str, data: bytes):
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, 'wb') as f:
        f.write(data)


def sha256_file(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, 'rb') as f:
        for chunk in iter(lambda: f.read(65536), b''):
            digest.update(chunk)
    return digest.hexdigest()


@dataclass
class RunManifest:
    command: str
    parameters: Dict = field(default_factory=dict)
    inputs: Dict[str, str] = field(default_factory=dict)
    outputs: List[str] = field(default_factory=list)
    version: str = VERSION
    wall_time: float = 0.0

    def add_input(self, path: str):
        self.inputs[path] = sha256_file(path)

    def as_dict(self) -> Dict:
        return {'command': self.command, 'parameters': self.parameters, 'inputs': self.inputs,
                'outputs': sorted(self.outputs), 'version': self.version, 'wall_time': self.wall_time}


class ArtifactWriter:
    """
    Collects the outputs of one command in memory. `commit` writes them under
    out_dir; in check mode it compares against the files already there and
    raises ArtifactDrift on any difference. Nothing touches disk before commit.

    The manifest is not one of the compared outputs: it records wall time,
    so it differs between runs, and check mode leaves it untouched.
    """

    def __init__(self, out_dir: str, manifest: RunManifest, check: bool = False):
        self.out_dir = out_dir
        self.manifest = manifest
        self.check = check
        self._pending: Dict[str, bytes] = {}
        self._started = time.perf_counter()

    def add_csv(self, name: str, frame: pd.DataFrame):
        self._pending[name] = csv_bytes(frame)

    def add_json(self, name: str, payload):
        self._pending[name] = json_bytes(payload)

    @property
    def names(self) -> List[str]:
        return sorted(self._pending)

    def drift(self) -> List[str]:
        changed = []
        for name, data in sorted(self._pending.items()):
            path = os.path.join(self.out_dir, name)
            if not os.path.exists(path):
                changed.append(name)
                continue
            with open(path, 'rb') as f:
                if f.read() != data:
                    changed.append(name)
        return changed

    def commit(self) -> Optional[str]:
        """Write (or verify) every buffered output; returns the manifest path when written."""
        if self.check:
            changed = self.drift()
            if changed:
                raise ArtifactDrift(f'{len(changed)} artifact(s) differ from {self.out_dir}', files=changed)
            logger.info('check mode: %d artifacts unchanged', len(self._pending))
            return None

        for name, data in sorted(self._pending.items()):
            _write_bytes(os.path.join(self.out_dir, name), data)
        self.manifest.outputs = self.names
        self.manifest.wall_time = round(time.perf_counter() - self._started, 3)
        path = os.path.join(self.out_dir, MANIFEST_NAME)
        _write_bytes(path, json_bytes(self.manifest.as_dict()))
        logger.info('wrote %d artifacts to %s', len(self._pending), self.out_dir)
        return path
