"""How volatility bends the calibrated Libor levels below their forwards.

The backward induction pins every slice to the initial curve, so the
state-independent Libor level Ltilde_i that comes out is NOT the forward
rate: it carries a convexity adjustment that grows with volatility and
with how much of the tenor structure still lies ahead.  This script
solves one flat curve at several volatilities and plots the relative
adjustment (L_fwd - Ltilde) / L_fwd per slice.

Run:  python3 demos/01_convexity_adjustment.py
Writes demos/out/convexity_adjustment.png and prints the worst slice
per volatility.
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
from mpmath import mp

from lnmarkov import flat_curve, forward_libors, rebase, solve

OUT = Path(__file__).resolve().parent / "out"
OUT.mkdir(exist_ok=True)

R0, N, TAU = "0.05", 20, "0.25"
PSI_VALUES = ["0.1", "0.2", "0.3", "0.5"]

fig, ax = plt.subplots(figsize=(7.5, 4.5))

print(f"flat curve: r0 = {R0}, {N} quarterly periods")
print()
print(f"{'psi':>5}  {'deepest slice':>13}  {'max adjustment':>14}")

for psi in PSI_VALUES:
    model = flat_curve(R0, N, TAU, psi=psi)
    sol = solve(model)
    with mp.workprec(model.precision_bits):
        fwds = forward_libors(rebase(model), model.accruals)
        rel = [
            float((fwds[i] - sol.adjusted_libors[i]) / fwds[i])
            for i in range(model.n)
        ]
    worst = max(range(model.n), key=lambda i: rel[i])
    print(f"{psi:>5}  {worst:>13d}  {rel[worst]:>13.2%}")
    ax.plot(range(model.n), rel, marker="o", ms=3, label=f"psi = {psi}")

print()
print(
    "The adjustment is always positive (the calibrated level sits below\n"
    "the forward), vanishes at the first and last slices, and is deepest\n"
    "in the interior where both elapsed time and the remaining tenor tail\n"
    "are large.  At psi = 0.5 the mid-curve levels have already lost about\n"
    "a third of the forward rate -- the same mechanism that eventually\n"
    "drives the high-volatility collapse of the model."
)

ax.set_xlabel("slice index i")
ax.set_ylabel("(L_fwd - Ltilde) / L_fwd")
ax.set_title("Convexity adjustment of the calibrated Libor levels")
ax.legend()
ax.grid(alpha=0.3)
fig.tight_layout()
fig.savefig(OUT / "convexity_adjustment.png", dpi=130)
print(f"\nfigure -> {OUT / 'convexity_adjustment.png'}")
