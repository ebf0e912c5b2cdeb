"""Parcel tampering detection toolkit.

Pipeline: synthesize or load annotated parcel images, rectify each visible
side surface to a fronto-parallel view, compare it against a reference view
of the same physical face under several homogenization methods and
similarity metrics, and classify pairs with a learned threshold rule.
"""

__version__ = "0.1.0"
