"""Published regression models shipped with the package.

The raw tables in ``data/coefficient_tables.json`` keep each coefficient under the
symbol it was printed with (``c_913``, ``C_115``, ``d_91315`` ...). Subscripts
are concatenated variable numbers, so they are tokenised against the valid
label set of the design space; a symbol that admits more than one split is
rejected instead of guessed.

``data/models/<id>.json`` holds the tokenised models in the regular model
file format, and ``data/checksums.json`` pins their SHA-256 digests.
"""

from __future__ import annotations

import hashlib
import json
from functools import lru_cache
from importlib import resources

from .design_space import load_space
from .surrogate import PolynomialSurrogate, SurrogateError, Term

PUBLISHED_MODEL_IDS = (
    "prp300.sigma_front",
    "prp300.sigma_rear",
    "prp300.uz",
    "prp300.mass",
    "prosib.sigma_front",
    "prosib.sigma_rear",
    "prosib.uz",
    "prosib.mass",
)

# interaction order implied by the coefficient letter
_ORDER = {"a": 0, "b": 1, "c": 2, "d": 3, "e": 4, "n": 2}


class SubscriptError(SurrogateError):
    pass


class ChecksumError(RuntimeError):
    pass


def _splits(digits: str, parts: int, tokens: frozenset[str]) -> list[tuple[str, ...]]:
    if parts == 0:
        return [()] if not digits else []
    out = []
    for i in range(1, len(digits) + 1):
        head = digits[:i]
        if head in tokens:
            out.extend((head,) + rest for rest in _splits(digits[i:], parts - 1, tokens))
    return out


def parse_symbol(symbol: str, labels) -> tuple[tuple[str, int], ...] | None:
    """Turn a printed coefficient symbol into factors; ``None`` means the intercept.

    ``labels`` are the model's variable labels (``x1``, ``x13`` ...). Letters
    b/c/d/e (any case) give 1/2/3/4-factor terms, ``a_0``/``A_0``/``m_0`` is the
    intercept, ``m_l`` a main effect and ``n_lm`` a two-factor interaction.
    A two-factor subscript repeating one number (``c_22``) is a pure square.
    """
    try:
        letter, digits = symbol.split("_", 1)
    except ValueError:
        raise SubscriptError(f"malformed coefficient symbol {symbol!r}") from None
    letter = letter.lower()
    if letter == "m":
        order = 0 if digits == "0" else 1
    elif letter in _ORDER:
        order = _ORDER[letter]
    else:
        raise SubscriptError(f"unknown coefficient letter in {symbol!r}")
    if order == 0:
        if digits != "0":
            raise SubscriptError(f"intercept symbol must have subscript 0: {symbol!r}")
        return None

    numbers = {lab[1:]: lab for lab in labels if lab.startswith("x")}
    candidates = []
    for split in _splits(digits, order, frozenset(numbers)):
        if len(set(split)) == len(split):
            candidates.append(tuple((numbers[s], 1) for s in split))
        elif order == 2:
            candidates.append(((numbers[split[0]], 2),))
    if not candidates:
        raise SubscriptError(f"{symbol!r} does not split into {order} valid variable numbers")
    if len(candidates) > 1:
        shown = ["*".join(f"{lab}^{e}" if e > 1 else lab for lab, e in c) for c in candidates]
        raise SubscriptError(f"{symbol!r} is ambiguous: {shown}")
    return candidates[0]


def _data_text(*parts: str) -> str:
    node = resources.files("boxwing_doe.data")
    for p in parts:
        node = node.joinpath(p)
    return node.read_text()


@lru_cache(maxsize=None)
def coefficient_tables() -> dict:
    return json.loads(_data_text("coefficient_tables.json"))


def model_from_table(model_id: str) -> PolynomialSurrogate:
    """Build a model straight from the raw published table (tokenising every symbol)."""
    tables = coefficient_tables()
    if model_id not in tables:
        raise KeyError(f"unknown built-in model {model_id!r}; choose from {', '.join(PUBLISHED_MODEL_IDS)}")
    spec = tables[model_id]
    labels = load_space(spec["space"]).labels
    intercept = None
    terms = []
    for symbol, value in spec["coefficients"]:
        factors = parse_symbol(symbol, labels)
        if factors is None:
            intercept = value
        else:
            terms.append(Term(factors, value))
    if intercept is None:
        raise SubscriptError(f"{model_id}: no intercept in table")
    meta = dict(spec.get("metadata", {}))
    meta.update({"id": model_id, "space": spec["space"]})
    return PolynomialSurrogate(spec["response_name"], spec["unit"], labels, intercept, tuple(terms), metadata=meta)


def _sha256(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


@lru_cache(maxsize=None)
def _checksums() -> dict:
    return json.loads(_data_text("checksums.json"))


def load_published_model(model_id: str, verify: bool = True) -> PolynomialSurrogate:
    """Load one of the embedded published models (see ``PUBLISHED_MODEL_IDS``)."""
    if model_id not in PUBLISHED_MODEL_IDS:
        raise KeyError(f"unknown built-in model {model_id!r}; choose from {', '.join(PUBLISHED_MODEL_IDS)}")
    fname = f"{model_id}.json"
    text = _data_text("models", fname)
    if verify:
        expected = _checksums().get(fname)
        if expected != _sha256(text):
            raise ChecksumError(f"checksum mismatch for embedded model {fname}")
    return PolynomialSurrogate.from_dict(json.loads(text))


def render_model_json(model: PolynomialSurrogate) -> str:
    return json.dumps(model.to_dict(), indent=2) + "\n"
