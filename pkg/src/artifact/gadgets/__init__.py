"""Fault-tolerant gadgets as explicit leveled circuits."""
