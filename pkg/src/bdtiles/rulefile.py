"""Rule documents: JSON with exact ``"p/q"`` rationals."""
from __future__ import annotations

import json
from fractions import Fraction
from importlib import resources

import jsonschema

from .errors import RuleFormatError, RuleSchemaError, RuleValidationError
from .substitution import Child, Prototile, SubstitutionRule, validate_rule

RATIONAL = {"type": "string", "pattern": r"^-?[0-9]+(/[0-9]*[1-9][0-9]*)?$"}
VECTOR = {"type": "array", "items": RATIONAL, "minItems": 1}

RULE_SCHEMA = {
    "type": "object",
    "required": ["dimension", "inflation", "prototiles", "children"],
    "additionalProperties": False,
    "properties": {
        "dimension": {"type": "integer", "minimum": 1},
        "inflation": RATIONAL,
        "prototiles": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "extents"],
                "additionalProperties": False,
                "properties": {"id": {"type": "string", "minLength": 1}, "extents": VECTOR},
            },
        },
        "children": {
            "type": "object",
            "additionalProperties": {
                "type": "array",
                "items": {
                    "type": "object",
                    "required": ["child", "offset"],
                    "additionalProperties": False,
                    "properties": {"child": {"type": "string"}, "offset": VECTOR},
                },
            },
        },
        "named_patches": {
            "type": "object",
            "additionalProperties": {
                "type": "array",
                "minItems": 1,
                "items": {
                    "type": "object",
                    "required": ["tile", "offset"],
                    "additionalProperties": False,
                    "properties": {"tile": {"type": "string"}, "offset": VECTOR},
                },
            },
        },
    },
}

BUNDLED = "example_rule.json"


def format_rational(x) -> str:
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def _field(path) -> str:
    return "/".join(str(p) for p in path) or "<root>"


def _vector(values, d, where):
    if len(values) != d:
        raise RuleSchemaError(f"{where}: expected {d} coordinates, got {len(values)}")
    return tuple(Fraction(v) for v in values)


def parse_rule(text: str, validate: bool = True) -> SubstitutionRule:
    """Parse and validate a rule document."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise RuleFormatError(f"malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    try:
        jsonschema.validate(doc, RULE_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise RuleSchemaError(f"schema violation at {_field(exc.absolute_path)}: {exc.message}") from exc

    d = doc["dimension"]
    names = [p["id"] for p in doc["prototiles"]]
    if len(set(names)) != len(names):
        raise RuleSchemaError("prototiles: duplicate id")
    index = {name: i for i, name in enumerate(names)}

    prototiles = []
    for i, p in enumerate(doc["prototiles"]):
        ext = _vector(p["extents"], d, f"prototiles/{i}/extents")
        if any(e <= 0 for e in ext):
            raise RuleSchemaError(f"prototiles/{i}/extents: extents must be positive")
        prototiles.append(Prototile(i, ext, p["id"]))

    unknown = set(doc["children"]) - set(index)
    if unknown:
        raise RuleSchemaError(f"children: unknown prototile {sorted(unknown)[0]!r}")
    children = []
    for name in names:
        kids = []
        for j, c in enumerate(doc["children"].get(name, [])):
            where = f"children/{name}/{j}"
            if c["child"] not in index:
                raise RuleSchemaError(f"{where}/child: unknown prototile {c['child']!r}")
            kids.append(Child(index[c["child"]], _vector(c["offset"], d, where + "/offset")))
        kids.sort(key=lambda c: (c.offset, c.prototile_id))
        children.append(tuple(kids))

    named = {}
    for pname in sorted(doc.get("named_patches", {})):
        tiles = []
        for j, t in enumerate(doc["named_patches"][pname]):
            where = f"named_patches/{pname}/{j}"
            if t["tile"] not in index:
                raise RuleSchemaError(f"{where}/tile: unknown prototile {t['tile']!r}")
            tiles.append((index[t["tile"]], _vector(t["offset"], d, where + "/offset")))
        named[pname] = tiles

    rule = SubstitutionRule(d, Fraction(doc["inflation"]), tuple(prototiles), tuple(children))
    rule.named_patches.update({k: rule.patch(v) for k, v in named.items()})
    if validate:
        report = validate_rule(rule)
        if not report.ok:
            msg = "; ".join(v.message for v in report.violations)
            raise RuleValidationError(f"rule validation failed: {msg}", report.violations)
    return rule


def rule_document(rule: SubstitutionRule) -> dict:
    names = [p.label for p in rule.prototiles]
    doc = {
        "dimension": rule.dimension,
        "inflation": format_rational(rule.inflation),
        "prototiles": [
            {"id": p.label, "extents": [format_rational(e) for e in p.extents]} for p in rule.prototiles
        ],
        "children": {
            names[i]: [
                {"child": names[c.prototile_id], "offset": [format_rational(x) for x in c.offset]}
                for c in kids
            ]
            for i, kids in enumerate(rule.children)
        },
    }
    if rule.named_patches:
        doc["named_patches"] = {
            name: [
                {"tile": names[t.prototile_id], "offset": [format_rational(x) for x in t.offset]}
                for t in patch.tiles
            ]
            for name, patch in sorted(rule.named_patches.items())
        }
    return doc


def serialize_rule(rule: SubstitutionRule) -> str:
    return json.dumps(rule_document(rule), indent=2) + "\n"


def load_rule(path, validate: bool = True) -> SubstitutionRule:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except UnicodeDecodeError as exc:
        raise RuleFormatError(f"{path}: not UTF-8 ({exc})") from exc
    return parse_rule(text, validate)


def bundled_rule_text() -> str:
    return resources.files("bdtiles").joinpath("data", BUNDLED).read_text(encoding="utf-8")


def bundled_rule() -> SubstitutionRule:
    """The two-prototile planar example: a unit square and a 2x1 rectangle, inflation 3."""
    return parse_rule(bundled_rule_text())


def named_pair(rule: SubstitutionRule, p: str | None = None, q: str | None = None) -> tuple:
    """Resolve the (P, Q) patch names; defaults to the first two named patches."""
    names = sorted(rule.named_patches)
    if p is None or q is None:
        if len(names) < 2:
            raise RuleSchemaError("rule declares fewer than two named patches; pass --p and --q")
        p = names[0] if p is None else p
        q = names[1] if q is None else q
    for n in (p, q):
        if n not in rule.named_patches:
            raise RuleSchemaError(f"named_patches: no patch called {n!r}")
    return p, q
