# %% [markdown]
# Exact penalty-weighted error on an enumerated law
#
# The Ex1 design depends on three factors, so its law of (X2, X3, X5, Y) is a
# 27 x 3 table. On such a table every quantity can be computed by brute force.

# %%
from mdr.core import PenaltyVector
from mdr.oracle import (balanced_psi, err_exact_def, err_exact_telescoped, optimal_predictor,
                        sigma2_exact)
from mdr.simgen import GeneratorSpec, exact_law

law = exact_law(GeneratorSpec("ex1", N=1, seed=0))
print("P(Y=-1), P(Y=0), P(Y=1):", law.y_marginal().round(4))

# %% [markdown]
# The balanced penalty weights each response by the inverse of its frequency.
# The optimal rule minimizes the weighted absolute deviation cell by cell.

# %%
psi = balanced_psi(law)
rule = optimal_predictor(law, None, psi)
print("penalty:", psi.values.round(4))
print("predictions for the first nine cells:", rule.table[:9])

# %%
direct = err_exact_def(law, rule, psi)
thresholds = err_exact_telescoped(law, rule, psi)
print(f"error, direct sum     {direct:.12f}")
print(f"error, threshold sum  {thresholds:.12f}")
print(f"variance of V         {sigma2_exact(law, rule):.6f}")

# %% [markdown]
# Unit weights give plain mean absolute error, and the best rule changes with them.

# %%
flat = PenaltyVector.constant(1)
print("unit-weight rule on first nine cells:", optimal_predictor(law, None, flat).table[:9])
