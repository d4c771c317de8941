"""romaq: robust counterparts of matrix-uncertain quadratic constraints.

Compiles robust counterparts of uncertain quadratic and conic-quadratic
constraints over matrix-valued uncertainty sets into conic programs
(LP/SOCP/SDP) and solves them with an embedded primal-dual interior-point
method.
"""

__version__ = "0.1.0"
