"""Reusable primitives for simulating a qubit coupled to a heavy particle."""
