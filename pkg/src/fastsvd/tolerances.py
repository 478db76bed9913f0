"""Frozen acceptance tolerances, set from oracle sweeps of this implementation.

Measured worst cases with the default configuration (16-bit input with 12 fraction
bits, 32-bit internal words, four scaling stages, tol 2**-16):

- singular values vs the brute-force oracle, 1000 random 2x2 inputs: 2**-24.8
  relative to sigma_max; 200 random 8x8: 2**-21.9
- reconstruction, converged 70x70 normal inputs: 2**-15.1 relative
- orthogonality of U and V at 70x70: 2**-18.8
"""

TAU_SV = 2.0**-20
TAU_REC = 2.0**-13
TAU_ORTH = 2.0**-12
