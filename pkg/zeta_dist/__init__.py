"""
zeta-dist: multidimensional polynomial Euler products as probability laws

For Z_E(s) = prod_p prod_{l,k} (1 - alpha_lk(p) p^{-<a_l, s>})^{-1} and sigma in
the region of absolute convergence, f_sigma(t) = Z_E(sigma + i t) / Z_E(sigma)
is either a compound Poisson characteristic function or not a characteristic
function at all. This package:
1. Evaluates truncated Euler products with certified tails
2. Classifies f_sigma and names the offending (direction, prime) pairs
3. Enumerates the finite Levy measure, its cumulants and moments
4. Searches for explicit witnesses t0 with |f_sigma(t0)| > 1
5. Samples the compound Poisson law reproducibly

Components:
- arith: primes and real Dirichlet characters
- product: ProductSpec, evaluation, truncation policy
- classify: sign theorems and the atom certificate
- levy: Levy measures, cumulants, closed-form comparison
- witness: witness search
- sampler: seeded compound Poisson sampling
- catalog: named example products

Usage:
    from zeta_dist import catalog, classify

    entry = catalog.get("L1")
    classify.classify(entry.spec, [2.0]).verdict

Or via CLI:
    zeta-dist classify --catalog L1 --sigma 2
    zeta-dist witness --catalog md_iv --sigma 2,0.5
    zd-run-log runs.jsonl --tail 5
"""

__version__ = "0.1.0"
