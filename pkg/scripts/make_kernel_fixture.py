"""Freeze computer-algebra values of the third x3-derivative of exp(i k r)/r.

The output ``tests/fixtures/d3g_sympy.json`` is the independent oracle for
``cornerprobe.kernels.d3_g`` and ``grad_d3_g``.  Values are evaluated with
40 significant digits from an expression sympy differentiates directly in
Cartesian coordinates, so no chain-rule bookkeeping is shared with the
package.
"""

import json
from pathlib import Path

import sympy as sp

POINTS = [
    (1.0, (0.3, -0.2, 0.5)),
    (2.0, (0.1, 0.05, 0.02)),
    (2.0, (-0.7, 0.4, -1.1)),
    (0.5, (1.0, 1.0, 1.0)),
    (3.0, (0.0, 0.0, 0.25)),
    (1.0, (0.01, -0.02, 0.015)),
]

OUT = Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "d3g_sympy.json"


def main() -> None:
    x1, x2, x3, k = sp.symbols("x1 x2 x3 k", real=True)
    r = sp.sqrt(x1**2 + x2**2 + x3**2)
    g = sp.exp(sp.I * k * r) / r
    d3 = sp.diff(g, x3, 3)
    grad = [sp.diff(d3, v) for v in (x1, x2, x3)]
    rows = []
    for kappa, x in POINTS:
        subs = {k: sp.Float(kappa, 40), x1: sp.Float(x[0], 40), x2: sp.Float(x[1], 40), x3: sp.Float(x[2], 40)}
        val = complex(d3.evalf(40, subs=subs))
        gr = [complex(e.evalf(40, subs=subs)) for e in grad]
        rows.append({"kappa": kappa, "x": list(x), "d3": [val.real, val.imag],
                     "grad": [[z.real, z.imag] for z in gr]})
    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text(json.dumps(rows, indent=1) + "\n")
    print(f"wrote {len(rows)} rows to {OUT}")


if __name__ == "__main__":
    main()
