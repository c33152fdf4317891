"""Alignment of program pairs into single verifiable product programs.

Two Imp programs are embedded into a relational alignment algebra, the space
of equivalent alignments is grown in an e-graph by realignment laws, and a
trace-guided annealer extracts the alignment whose executions look most
lockstep.
"""

__version__ = "0.1.0"
