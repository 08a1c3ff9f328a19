"""Geometry of the two descent directions for a pair of gradients.

The min-norm hull direction is the shortest convex combination of the raw
gradients; the equiangular direction combines the *normalized* gradients
and is rescaled so the step lives back on the gradients' scale. When the
two gradients have equal norms the directions coincide; when one loss is
rescaled, the hull direction swings toward the small gradient while the
equiangular direction only changes length, not direction.
"""

import numpy as np

from mograd import bisector_two, edm_direction, mgda_direction

g1 = np.array([2.0, 0.0])
g2 = np.array([0.0, 1.0])

print("gradients:")
print(f"  g1 = {g1}   (norm {np.linalg.norm(g1):.3f})")
print(f"  g2 = {g2}   (norm {np.linalg.norm(g2):.3f})")
print()

edm = edm_direction([g1, g2])
mgda = mgda_direction([g1, g2])

print("equiangular direction:")
print(f"  weights            {edm.weights}")
print(f"  raw d_b            {edm.raw_direction}")
print(f"  rescaling gamma    {edm.gamma:.6f}")
print(f"  step gamma*d_b     {edm.normalized_direction}")
print(f"  closed-form check  {bisector_two(g1, g2)}   (two-gradient bisector)")
print()
print("min-norm hull direction:")
print(f"  weights            {mgda.weights}")
print(f"  d_h                {mgda.raw_direction}")
print()

# the equiangular property: the step makes the same angle with every
# gradient it is supported on
d = edm.raw_direction
for i, g in enumerate([g1, g2]):
    cos = d @ g / (np.linalg.norm(d) * np.linalg.norm(g))
    print(f"  angle(d_b, g{i + 1}) = {np.degrees(np.arccos(cos)):.3f} degrees")
print()

print("now rescale g2 by 50 (same objectives, one loss in different units):")
scaled = [g1, 50.0 * g2]
edm50 = edm_direction(scaled)
mgda50 = mgda_direction(scaled)
unit = lambda v: v / np.linalg.norm(v)
print(f"  equiangular unit step   {unit(edm50.normalized_direction)}"
      f"   (unchanged: {np.allclose(unit(edm50.normalized_direction), unit(edm.normalized_direction))})")
print(f"  hull-direction unit     {unit(mgda50.raw_direction)}"
      f"   vs before {unit(mgda.raw_direction)}")
print(f"  hull weights now        {mgda50.weights}   (almost all weight on the small gradient)")
