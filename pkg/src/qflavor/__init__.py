"""Desk-scale simulation of canonical quantum bit commitments, swap-trapdoor
function pairs, quantum-ciphertext encryption and one-shot signatures."""

__version__ = "0.1.0"
