# %% [markdown]
# Normal limit of the studentized estimate
#
# Across replicates, sqrt(N) (estimate - exact error) / sigma_hat should look
# standard normal. The same holds for the prefix statistic.

# %%
from mdr.clt import (confidence_interval, exchangeable_harness, mc_normality, oracle_target, run_replicates,
                     sigma2_hat, stabilization_trace)
from mdr.cv import PsiScope, err_hat_K
from mdr.simgen import GeneratorSpec, generate

spec = GeneratorSpec("ex1", N=2000, seed=3)
target = oracle_target(spec, spec.significant)
print(f"exact error {target.err:.5f}, exact variance {target.sigma2:.5f}")

# %%
reps = run_replicates(spec, spec.significant, 10, None, PsiScope.COMPLEMENT, 2000, 100)
for prefix in (False, True):
    rep = mc_normality(spec, spec.significant, N=2000, replicates=100, prefix=prefix, reps=reps)
    print("prefix" if prefix else "full  ", f"mean {rep.mean:+.3f} var {rep.variance:.3f} KS {rep.ks:.3f}")

# %% [markdown]
# One dataset, one interval.

# %%
data = generate(spec)
ci = confidence_interval(err_hat_K(data, spec.significant, scope=PsiScope.COMPLEMENT),
                         sigma2_hat(data, spec.significant))
print(f"95% interval [{ci.lower:.4f}, {ci.upper:.4f}] covers the exact error: {ci.covers(target.err)}")

# %% [markdown]
# Partial sums of exchangeable rows shrink by (1 - alpha).

# %%
for construction in ("iid_normal", "shared_effect", "urn"):
    rep = exchangeable_harness(construction, k=4000, alpha=0.5, replicates=200, seed=1)
    print(f"{construction:14s} variance ratio {rep.extra['variance_ratio']:.3f}")

# %%
for row in stabilization_trace(spec, spec.significant, N_grid=(100, 500, 2000)):
    print(row[0], round(row[1], 4), (round(row[3], 4), round(row[4], 4)))
