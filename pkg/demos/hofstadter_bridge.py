"""From a Harper-Hofstadter strip to an effective two-mode waveguide and its winding number."""

from topamp.bloch import BlochSymbol, winding_scalar
from topamp.hofstadter import HofstadterSpec, edge_modes_in_gap, gap_interval, to_waveguide_spec

spec = HofstadterSpec(q=9, L=60)
lo, hi = gap_interval(spec, 2)
table = edge_modes_in_gap(spec, 2, 0.5 * (lo + hi))
for c in table.crossings:
    print(f"k = {c.k:+.4f}  v = {c.v:.4f}  eta = {c.eta:+.3f}")
wg = to_waveguide_spec(table, g=0.3, l_kappa=1000.0)
print("effective waveguide:", wg)
for pump in (0.0, 0.5 * wg.gamma_total, 0.9 * wg.gamma_total):
    print(f"P = {pump:.4f}: W = {winding_scalar(BlochSymbol(wg, pump)).W}")
