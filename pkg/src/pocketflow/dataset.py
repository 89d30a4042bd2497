"""Dataset archive: ingested pocket/ligand complexes as one JSON file.

Elements are stored by symbol so an archive remains readable under any
vocabulary that covers them; coordinates round-trip exactly through JSON's
decimal repr.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .chem import Atom, Molecule, Pocket, Vocabulary
from .pdb import ComplexEntry

DATASET_FORMAT = "pocketflow-dataset"
DATASET_VERSION = 1


class DatasetError(ValueError):
    """Unreadable or version-incompatible dataset archive."""


def _entry_payload(entry: ComplexEntry, vocab: Vocabulary) -> dict:
    return {
        "entry_id": entry.entry_id,
        "pocket": {
            "elements": [vocab[a.element].symbol for a in entry.pocket.atoms],
            "positions": [list(map(float, a.position)) for a in entry.pocket.atoms],
            "bfactors": [float(b) for b in entry.pocket.bfactors],
        },
        "ligand": {
            "elements": [vocab[a.element].symbol for a in entry.ligand.atoms],
            "positions": [list(map(float, a.position)) for a in entry.ligand.atoms],
            "bonds": [list(b) for b in entry.ligand.bonds],
        },
    }


def save_dataset(entries: list[ComplexEntry], vocab: Vocabulary, path: str | Path) -> None:
    payload = {
        "format": DATASET_FORMAT,
        "version": DATASET_VERSION,
        "entries": [_entry_payload(e, vocab) for e in entries],
    }
    Path(path).write_text(json.dumps(payload, indent=1, sort_keys=True) + "\n")


def load_dataset(path: str | Path, vocab: Vocabulary) -> list[ComplexEntry]:
    path = Path(path)
    if not path.exists():
        raise DatasetError(f"dataset not found: {path}")
    try:
        payload = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise DatasetError(f"{path}: not valid JSON ({exc})") from None
    if payload.get("format") != DATASET_FORMAT:
        raise DatasetError(f"{path}: not a {DATASET_FORMAT} archive")
    if payload.get("version") != DATASET_VERSION:
        raise DatasetError(f"{path}: unsupported version {payload.get('version')!r}")
    entries = []
    for item in payload["entries"]:
        pocket = Pocket(
            [
                Atom(vocab.index(sym), np.array(pos))
                for sym, pos in zip(item["pocket"]["elements"], item["pocket"]["positions"])
            ],
            np.array(item["pocket"]["bfactors"]),
        )
        ligand = Molecule(
            [
                Atom(vocab.index(sym), np.array(pos))
                for sym, pos in zip(item["ligand"]["elements"], item["ligand"]["positions"])
            ],
            [tuple(b) for b in item["ligand"]["bonds"]],
        )
        entries.append(ComplexEntry(pocket=pocket, ligand=ligand, entry_id=item["entry_id"]))
    return entries
