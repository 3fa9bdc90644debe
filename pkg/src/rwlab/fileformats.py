"""Structured-text files (chains, weights, run configs) and CSV output.

One dialect serves all three: `[section]` headers and `key = value` lines,
with `#` comments.  Chain prefixes are comma-separated rationals, tail rules
and smooth factors use the expression mini-grammar, so parse -> format ->
parse is stable.  All writes are atomic (temp file + rename) and
deterministic for a given input.
"""

from __future__ import annotations

import os
import tempfile
from fractions import Fraction

import mpmath as mp
import numpy as np

from . import expressions as ex
from .chains import ChainSpec, CoeffRule
from .errors import InputError
from .recover import WeightSpec


def parse_sections(text: str) -> dict[str, dict[str, str]]:
    sections: dict[str, dict[str, str]] = {}
    current: dict[str, str] | None = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            name = line[1:-1].strip().lower()
            current = sections.setdefault(name, {})
            continue
        if "=" not in line or current is None:
            raise InputError(f"line {lineno}: expected 'key = value' inside a section")
        key, value = line.split("=", 1)
        current[key.strip().lower()] = value.strip()
    return sections


def _parse_prefix(text: str) -> tuple[Fraction, ...]:
    text = text.strip()
    if not text:
        return ()
    return tuple(Fraction(part.strip()) for part in text.split(","))


def _parse_tail(text: str) -> ex.Expr | None:
    text = text.strip()
    if not text or text.lower() == "none":
        return None
    return ex.parse(text, "j")


def chain_from_sections(sections: dict[str, dict[str, str]]) -> ChainSpec:
    if "chain" not in sections:
        raise InputError("no [chain] section")
    sec = sections["chain"]
    label = sec.get("label", "chain")
    rules = {}
    for name in ("p", "q", "r", "kappa"):
        prefix = _parse_prefix(sec.get(f"{name}_prefix", ""))
        tail = _parse_tail(sec.get(f"{name}_tail", ""))
        rules[name] = CoeffRule(prefix, tail)
    chain = ChainSpec(label, rules["p"], rules["q"], rules["r"], rules["kappa"])
    chain.validate()
    return chain


def chain_to_text(chain: ChainSpec, comment: str | None = None) -> str:
    lines = []
    if comment:
        for part in comment.splitlines():
            lines.append(f"# {part}")
    lines.append("[chain]")
    lines.append(f"label = {chain.label}")
    for name in ("p", "q", "r", "kappa"):
        coeff: CoeffRule = getattr(chain, name)
        prefix = ", ".join(str(v) for v in coeff.prefix)
        lines.append(f"{name}_prefix = {prefix}")
        tail = "none" if coeff.tail is None else ex.to_string(coeff.tail)
        lines.append(f"{name}_tail = {tail}")
    return "\n".join(lines) + "\n"


def weight_from_sections(sections: dict[str, dict[str, str]]) -> WeightSpec:
    if "weight" not in sections:
        raise InputError("no [weight] section")
    sec = sections["weight"]
    atoms_text = sec.get("atoms", "").strip()
    atoms = []
    if atoms_text and atoms_text.lower() != "none":
        for part in atoms_text.split(","):
            loc, mass = part.split(":")
            atoms.append((Fraction(loc.strip()), Fraction(mass.strip())))
    spec = WeightSpec(
        label=sec.get("label", "weight"),
        eta=Fraction(sec.get("eta", "1")),
        alpha=Fraction(sec["alpha"]),
        beta=Fraction(sec["beta"]),
        smooth=ex.parse(sec.get("smooth", "1"), "x"),
        atoms=tuple(atoms),
    )
    spec.validate()
    return spec


def weight_to_text(spec: WeightSpec) -> str:
    atoms = ", ".join(f"{loc}:{mass}" for loc, mass in spec.atoms) or "none"
    return (
        "[weight]\n"
        f"label = {spec.label}\n"
        f"eta = {spec.eta}\n"
        f"alpha = {spec.alpha}\n"
        f"beta = {spec.beta}\n"
        f"smooth = {ex.to_string(spec.smooth)}\n"
        f"atoms = {atoms}\n"
    )


def parse_file(path: str) -> dict[str, dict[str, str]]:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return parse_sections(fh.read())
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc


# --- output -------------------------------------------------------------------


def atomic_write(path: str, content: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", text=True)
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(content)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def format_number(value, digits: int = 17) -> str:
    """Shortest round-trip decimal for floats; mp.nstr for mpf values."""
    if isinstance(value, mp.mpf):
        return mp.nstr(value, digits, strip_zeros=True)
    if isinstance(value, np.floating):
        value = float(value)
    if isinstance(value, np.integer):
        value = int(value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def csv_text(header: list[str], rows) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(format_number(v) for v in row))
    return "\n".join(lines) + "\n"


def keyvalue_text(pairs) -> str:
    return "\n".join(f"{k} = {format_number(v)}" for k, v in pairs) + "\n"
