"""Weak-coupling limit of a finite system driven by creation, annihilation and number-conserving reservoir terms.

Modules, bottom up:

combinatorics  set partitions, occupation sequences, Pule permutations
fock_oracle    brute-force truncated Fock space
moments        vacuum moments by partitions and by Pule permutations
correlation    reservoir two-point functions and their constants
dyson          pre-limit Dyson terms, simplex contraction integrals
pule_bounds    series majorants for the Dyson expansion
limit_qsde     limit coefficients, Evans-Hudson maps, Lindblad semigroup
simulator      repeated-interaction integrator for the limit equation
cli            configuration driven experiment runner
"""

__version__ = "0.1.0"
