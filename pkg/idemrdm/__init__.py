"""idemrdm — reduced density matrices and entanglement of identical particles."""
