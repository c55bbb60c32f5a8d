"""Verification toolkit for unidirectional channel systems with tests.

A Sender talks to a Receiver over one reliable channel ``r`` and one lossy
channel ``l``; rules may be guarded by regular tests on channel contents.
The package models these systems, runs their semantics, reduces generalized
reachability step by step down to a Post embedding problem with partial
codirectness, and cross-checks every reduction against a bounded
explicit-state oracle.
"""

__version__ = "0.1.0"
