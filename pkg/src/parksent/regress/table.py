"""Table-shaped CSV output for a set of GAM fits."""
from __future__ import annotations

import csv
from pathlib import Path
from typing import Mapping, Sequence

from ..corpus import VARIABLE_LABELS
from .gam import GROUP, TENSOR, GamFit


def _fmt(x: float, digits: int = 3) -> str:
    return f"{x:.{digits}f}"


def model_table_rows(fits: Mapping[str, GamFit | None], variables: Sequence[str] | None = None,
                notes: Mapping[str, str] | None = None) -> list[list[str]]:
    """Rows of variables by models; cells hold coefficient and stars.

    A model mapped to ``None`` gets its note (or ``n/a``) in every cell.
    """
    models = list(fits)
    notes = notes or {}
    if variables is None:
        seen = []
        for fit in fits.values():
            for t in fit.terms if fit else []:
                if t.label not in seen:
                    seen.append(t.label)
        variables = seen
    rows = [["Variable"] + models]
    for var in variables:
        row = [VARIABLE_LABELS.get(var, var)]
        for m in models:
            fit = fits[m]
            if fit is None:
                row.append(notes.get(m, "n/a"))
                continue
            term = next((t for t in fit.terms if t.label == var), None)
            row.append("" if term is None else _fmt(term.coefficient) + term.stars)
        rows.append(row)
    for label, key in ((TENSOR + " edf", TENSOR), (GROUP + " edf", GROUP)):
        rows.append([label] + ["" if fits[m] is None else _fmt(fits[m].edf.get(key, float("nan")), 2)
                               for m in models])
    rows.append(["R2 (Adjusted)"] + ["" if fits[m] is None else _fmt(fits[m].r2_adjusted) for m in models])
    rows.append(["Sample size"] + ["" if fits[m] is None else str(fits[m].n) for m in models])
    return rows


def write_model_table(path: str | Path, fits, variables=None, notes=None) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        csv.writer(fh, lineterminator="\n").writerows(model_table_rows(fits, variables, notes))
