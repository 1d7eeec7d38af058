"""corrlab: desk-scale workbench for correlations of the von Mangoldt
and higher divisor functions.

Modules
-------
sieve      exact tabulation of Lambda, mu, log, d_k; Dirichlet convolution
corr       shifted correlation and Goldbach sums, error profiles
local      singular series, local factors, Ramanujan sums
arcs       exponential sums, major/minor arcs, circle identities
dirichlet  characters, Gauss sums, Dirichlet polynomials, Perron, moments
decomp     Heath-Brown identity and the combinatorial decomposition
expsum     maximal sums, phase sums, Legendre transform, B-process
cli        command-line front end
"""

__version__ = "0.1.0"
