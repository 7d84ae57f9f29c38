"""Committed validation fixtures.

The five-point cloud was found by a coordinate search (scripts/find_fivepoint.py
re-derives and re-verifies it): four corners of a square of side 0.7 plus an
apex below the bottom edge. Its Rips complex realizes the published counts
(V,E,T,C) = (5,4,0,2) at radius 0.8 and (5,6,1,1) at 0.9, with Betti-1
sequence (1,1,0) over radii (0.8, 0.9, 1.0), and the radius-0.8 edge
Laplacian is the 4-cycle spectrum {0,2,2,4}.
"""

import numpy as np

FIVE_POINT_CLOUD = np.array(
    [
        [0.0, 0.0],
        [0.7, 0.0],
        [0.7, 0.7],
        [0.0, 0.7],
        [0.35, -0.75],
    ]
)

FIVE_POINT_RADII = (0.8, 0.9, 1.0)
FIVE_POINT_BETTI1 = (1, 1, 0)
FIVE_POINT_COUNTS = {0.8: (5, 4, 0, 2), 0.9: (5, 6, 1, 1)}
