# %% [markdown]
# K-fold estimate of the prediction error
#
# Folds are contiguous blocks. Each fold is predicted by a per-cell rule fit on
# the other folds, and scored with a penalty estimated from response counts.

# %%
import numpy as np

from mdr.core import make_partition
from mdr.cv import PsiScope, err_hat_K, err_hat_partial
from mdr.penalty import psi_hat, psi_hat_clipped
from mdr.predictor import fit
from mdr.simgen import GeneratorSpec, generate

data = generate(GeneratorSpec("ex1", N=500, seed=7))
print(make_partition(10, 3).blocks)

# %%
fold = make_partition(data.N, 10).block0(0)
print("raw penalty on fold 1:    ", psi_hat(data, fold).as_dict())
print("clipped at 1/eps, eps=0.5:", psi_hat_clipped(data, fold, 0.5).as_dict())

# %%
train = make_partition(data.N, 10).complement0(0)
table = fit(data, train, [2, 3, 5], psi_hat(data, train))
print("fitted cells:", len(table.cells), "fallback:", table.fallback)

# %% [markdown]
# The right subset scores well below a wrong one. Both penalty scopes agree closely.

# %%
for beta in ([2, 3, 5], [1, 4, 6]):
    for scope in PsiScope:
        print(beta, scope.value, round(err_hat_K(data, beta, K=10, scope=scope).value, 4))

# %%
m_N = int(np.sqrt(data.N // 10))
print("prefix estimate with m_N =", m_N, ":", round(err_hat_partial(data, [2, 3, 5], 10, m_N), 4))
