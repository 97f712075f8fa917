"""Print the winding numbers of the two-mode loops and show how pump strength changes them."""

import math

from topamp import WaveguideSpec
from topamp.bloch import BlochSymbol, winding_roots, winding_scalar

for dk_over_pi in (0.0, 0.1, 0.9):
    wg = WaveguideSpec.equal([0.0, -math.pi * dk_over_pi], 3.0)
    sym = BlochSymbol(wg, pump=0.9)
    res = winding_scalar(sym)
    print(f"dk = {dk_over_pi:.1f} pi: W = {res.W} (raw {res.raw:+.6f}, roots inside disk {winding_roots(sym)})")

wg = WaveguideSpec.equal([0.0, math.pi / 2, -math.pi / 3], 3.0)
for pump in (0.0, 0.5, 0.9, 1.2, 1.5):
    print(f"three modes, P = {pump:.1f}: W = {winding_scalar(BlochSymbol(wg, pump)).W}")
