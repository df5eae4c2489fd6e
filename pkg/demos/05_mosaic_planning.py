"""
From generated layouts to a crop/paste plan
===========================================

Generated layouts can seed synthetic training images for detectors: each
generated box is matched to the most similar real annotated box (same
class, closest aspect ratio and size), producing a plan that names which
real pixels to crop where. The compositing itself happens downstream.
"""

from doclayout.mosaic import build_mosaic_plan
from doclayout.synthetic import two_column_corpus

# stand-ins: a few "generated" pages and a pool of "real" annotated pages
generated = two_column_corpus(3, seed=1)
real = two_column_corpus(40, seed=2)
for i, lay in enumerate(real):
    object.__setattr__(lay, "doc_id", f"scan_{i:03d}.jpg")

plan = build_mosaic_plan(generated, real, w_ar=1.0, w_area=1.0)

matched = [e for e in plan if e.matched]
print(f"{len(matched)}/{len(plan)} generated boxes matched")
print("worst match cost: %.4f" % max(e.cost for e in matched))
for entry in plan[:6]:
    x, y, w, h = entry.target_box
    print(f"  paste {entry.source_id} box {entry.source_box} -> "
          f"({x:.0f}, {y:.0f}, {w:.0f}, {h:.0f})  cost {entry.cost:.4f}")
