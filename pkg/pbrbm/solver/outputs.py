"""
CSV outputs and run manifests.

Every file starts with ``#`` comment lines carrying the pipeline name and the
manifest hash, followed by one header row with the column names. Floats are
written with ``repr`` so reruns with the same seed are byte-identical.
"""
import csv
import hashlib
import json
import logging
import os
import shutil
from pathlib import Path

import numpy as np

from .reference import grid_table

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"


def canonical_json(data):
    return json.dumps(data, sort_keys=True, separators=(",", ":"), default=_jsonable)


def _jsonable(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"{type(value).__name__} is not JSON serializable")


def build_manifest(pipeline, config, seed, code_version):
    """
    Manifest of one run: validated config, seed and code version, plus the hash over them.

    The output directory is not part of the manifest, so the same run written
    to two places hashes the same.
    """
    body = {
        "pipeline": pipeline,
        "config": {key: value for key, value in config.items() if key != "output"},
        "seed": seed,
        "code_version": code_version,
    }
    body["manifest_hash"] = hashlib.sha256(canonical_json(body).encode()).hexdigest()[:16]
    return body


def _cell(value):
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (np.integer, np.bool_)):
        return str(value.item())
    return str(value)


class RunOutput:
    """
    Output directory written atomically.

    Files go to a hidden sibling directory that is renamed onto ``target``
    when the ``with`` block exits cleanly, replacing an earlier run there. On
    any exception the temporary directory is removed and nothing is left
    behind.
    """

    def __init__(self, target, manifest):
        self.target = Path(target)
        self.manifest = manifest
        self.staging = self.target.parent / f".{self.target.name}.partial-{os.getpid()}"
        self.files = []

    def __enter__(self):
        if self.staging.exists():
            shutil.rmtree(self.staging)
        self.staging.mkdir(parents=True)
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc_type is not None:
            shutil.rmtree(self.staging, ignore_errors=True)
            logger.warning("Discarded partial outputs for %s", self.target)
            return False
        self._write_text(MANIFEST_NAME, json.dumps(self.manifest, sort_keys=True, indent=2,
                                                   default=_jsonable) + "\n")
        if self.target.exists():
            shutil.rmtree(self.target)
        os.replace(self.staging, self.target)
        logger.info("Wrote %d file(s) to %s", len(self.files), self.target)
        return False

    @property
    def manifest_hash(self):
        return self.manifest["manifest_hash"]

    def _header(self, title):
        return [f"# {self.manifest['pipeline']}: {title}", f"# manifest {self.manifest_hash}"]

    def _write_text(self, name, text):
        (self.staging / name).write_text(text)
        self.files.append(name)

    def write_table(self, name, columns, rows, title=None):
        path = self.staging / name
        with path.open("w", newline="") as handle:
            for line in self._header(title or name):
                handle.write(line + "\n")
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(columns)
            for row in rows:
                writer.writerow([_cell(value) for value in row])
        self.files.append(name)
        return path

    def write_grid(self, name, u, v, field, title=None):
        """Dense 2D field: first row holds the u coordinates, first column the v coordinates."""
        field = np.asarray(field)
        rows = [[float(v_j), *field[:, j]] for j, v_j in enumerate(v)]
        return self.write_table(name, ["v\\u", *(repr(float(value)) for value in u)], rows, title)


def write_grid_csv(sol, output, name="solution.csv"):
    """Nodal reference solution as (node, phi, rho_plus, rho_minus)."""
    columns, table = grid_table(sol)
    return output.write_table(name, columns, table, title="finite-difference reference")


def read_table(path):
    """Comment lines, column names and rows of a file written by :class:`RunOutput`; numbers parsed as floats."""
    comments, rows = [], []
    with Path(path).open() as handle:
        lines = handle.read().splitlines()
    while lines and lines[0].startswith("#"):
        comments.append(lines.pop(0))
    reader = csv.reader(lines)
    columns = next(reader)
    for row in reader:
        rows.append([_parse(value) for value in row])
    return comments, columns, rows


def _parse(value):
    try:
        return float(value)
    except ValueError:
        return value
