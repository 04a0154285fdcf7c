"""Planogram XML parsing and the expected product layout.

Coordinates are normalized to the shelf box: top-left is (0, 0) and
bottom-right is (1, 1). Row 0 is the top row.
"""
from __future__ import annotations

import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import ParseError, SchemaError


class Box(NamedTuple):
    x0: float
    y0: float
    x1: float
    y1: float

    @property
    def center(self) -> tuple[float, float]:
        return ((self.x0 + self.x1) / 2.0, (self.y0 + self.y1) / 2.0)

    @property
    def width(self) -> float:
        return self.x1 - self.x0

    @property
    def height(self) -> float:
        return self.y1 - self.y0

    def scaled(self, sx: float, sy: float) -> "Box":
        return Box(self.x0 * sx, self.y0 * sy, self.x1 * sx, self.y1 * sy)


@dataclass(frozen=True)
class Row:
    index: int
    box: Box
    products: tuple[tuple[str, Box], ...]


@dataclass(frozen=True)
class Planogram:
    rows: tuple[Row, ...]
    product_types: tuple[str, ...]
    shelf_box: Box = Box(0.0, 0.0, 1.0, 1.0)

    @property
    def n_products(self) -> int:
        return sum(len(r.products) for r in self.rows)

    def slots(self):
        """Yield ``(type_id, row, col, box)`` in row-major order."""
        for row in self.rows:
            for col, (type_id, box) in enumerate(row.products):
                yield type_id, row.index, col, box


@dataclass
class ExpectedLayout:
    """Expected product centres grouped by type.

    ``point_sets[t]`` is an ``(m, 2)`` array and ``slots[t][i]`` is the
    ``(row, col)`` slot the i-th point came from.
    """

    point_sets: dict[str, np.ndarray]
    slots: dict[str, list[tuple[int, int]]] = field(default_factory=dict)

    @property
    def types(self) -> list[str]:
        return list(self.point_sets)

    @property
    def M(self) -> int:
        return sum(len(p) for p in self.point_sets.values())


def build_planogram(rows: list[list[str]]) -> Planogram:
    """Subdivide the unit shelf box for the given per-row type lists."""
    if not rows:
        raise SchemaError("planogram has no rows")
    n_rows = len(rows)
    built = []
    types: list[str] = []
    for r, row_types in enumerate(rows):
        if not row_types:
            raise SchemaError(f"row {r} has no products")
        y0, y1 = r / n_rows, (r + 1) / n_rows
        n = len(row_types)
        products = []
        for c, t in enumerate(row_types):
            products.append((t, Box(c / n, y0, (c + 1) / n, y1)))
            if t not in types:
                types.append(t)
        built.append(Row(r, Box(0.0, y0, 1.0, y1), tuple(products)))
    return Planogram(tuple(built), tuple(types))


def parse_planogram(xml_text: str) -> Planogram:
    try:
        root = ET.fromstring(xml_text)
    except ET.ParseError as exc:
        line, col = exc.position
        raise ParseError(f"malformed planogram XML: {exc}", line, col) from None

    if root.tag != "planogram":
        raise SchemaError(f"root element must be <planogram>, got <{root.tag}>")
    shelves = root.findall("shelf")
    if len(shelves) != 1:
        raise SchemaError(f"expected exactly one <shelf>, found {len(shelves)}")
    shelf = shelves[0]
    row_elems = shelf.findall("row")
    declared = shelf.get("rows")
    if declared is not None:
        try:
            declared_n = int(declared)
        except ValueError:
            raise SchemaError(f"shelf rows attribute is not an integer: {declared!r}") from None
        if declared_n != len(row_elems):
            raise SchemaError(f"shelf declares {declared_n} rows but contains {len(row_elems)}")
    if not row_elems:
        raise SchemaError("planogram has no rows")

    rows = []
    for pos, row_el in enumerate(row_elems):
        idx = row_el.get("index")
        if idx is None:
            raise SchemaError(f"row at position {pos} is missing its index attribute")
        try:
            idx_n = int(idx)
        except ValueError:
            raise SchemaError(f"row index is not an integer: {idx!r}") from None
        if idx_n != pos:
            raise SchemaError(f"row indices must be 0..R-1 in document order; got {idx_n} at position {pos}")
        types = []
        for prod in row_el.findall("product"):
            t = prod.get("type")
            if t is None or t == "":
                raise SchemaError(f"product in row {idx_n} has no type")
            types.append(t)
        if not types:
            raise SchemaError(f"row {idx_n} has no products")
        rows.append(types)
    return build_planogram(rows)


def load_planogram(path) -> Planogram:
    with open(path, encoding="utf-8") as fh:
        return parse_planogram(fh.read())


def serialize_planogram(p: Planogram) -> str:
    root = ET.Element("planogram", version="1")
    shelf = ET.SubElement(root, "shelf", rows=str(len(p.rows)))
    for row in p.rows:
        row_el = ET.SubElement(shelf, "row", index=str(row.index))
        for type_id, _ in row.products:
            ET.SubElement(row_el, "product", type=type_id)
    ET.indent(root)
    return ET.tostring(root, encoding="unicode") + "\n"


def expected_layout(p: Planogram) -> ExpectedLayout:
    points: dict[str, list] = {t: [] for t in p.product_types}
    slots: dict[str, list] = {t: [] for t in p.product_types}
    for type_id, r, c, box in p.slots():
        points[type_id].append(box.center)
        slots[type_id].append((r, c))
    return ExpectedLayout(
        {t: np.asarray(v, dtype=float).reshape(-1, 2) for t, v in points.items()},
        slots,
    )
