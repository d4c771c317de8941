from romaq.conic.program import Cone, ConicProgram
from romaq.conic.solver import Solution, solve, verify

__all__ = ["Cone", "ConicProgram", "Solution", "solve", "verify"]
