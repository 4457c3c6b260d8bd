# %% [markdown]
# # Partial colouring instead of coin flips
#
# Toggling flips an independent coin per cycle. The colouring method instead
# picks all signs together, steering the signed sum of cycle matrices away
# from its largest directions.

# %%
import numpy as np

from eulersparse import generate_random_eulerian
from eulersparse.colouring import (
    CALIBRATED_STOP_CONSTANT,
    ColourConfig,
    GaussianWalkOracle,
    RandomSignOracle,
    colour_target,
    family_for_graph,
    pcs,
)
from eulersparse.cycles import naive_short_cycle_decomposition, orient_cycle
from eulersparse.toggle import CALIBRATED_STOP_CONSTANT as TOGGLE_C, ToggleConfig, sparsify

g = generate_random_eulerian(60, 600, max_len=8, seed=2, ensure_connected=True)
d = naive_short_cycle_decomposition(g, seed=0)
cycles = [orient_cycle(g, c) for c in d.cycles]
fam = family_for_graph(g, cycles)
print(f"{len(cycles)} cycles, variance {fam.variance():.4f}")

# %% [markdown]
# ## Two oracles on the same family
# Random signs give a full colouring at once. The Gaussian walk only freezes
# half of the coordinates per call but keeps the norm lower.

# %%
y = np.zeros(len(fam))
for oracle in (RandomSignOracle(), GaussianWalkOracle()):
    norms = [fam.sum_norm(oracle(fam, y, np.random.default_rng(s)) - y) for s in range(5)]
    print(f"{oracle.name:>13}: mean norm {np.mean(norms):.4f}")

# %% [markdown]
# ## Reaching a target mass
# Repeated calls shrink the set of cycles that still carry fractional colours.

# %%
res = colour_target(fam, y, m_t=100, oracle=GaussianWalkOracle(), rng=np.random.default_rng(0), measure=True)
left = int(fam.lengths[res.partial].sum())
print(f"{res.calls} calls, fractional mass {left} <= 100, norm {res.measured_norm:.4f}")

# %% [markdown]
# ## End to end, next to toggling

# %%
big = generate_random_eulerian(100, 3600, max_len=8, seed=3, ensure_connected=True)
cres = pcs(big, ColourConfig(stop_constant=CALIBRATED_STOP_CONSTANT, verify=True))
tres = sparsify(big, ToggleConfig(stop_constant=TOGGLE_C, verify=True))
for name, r in (("colour", cres), ("toggle", tres)):
    print(f"{name}: {big.m} -> {r.graph.m} edges, error {r.measured_error:.3f}, rounds {len(r.rounds)}")
for rep in cres.rounds:
    print(rep.branch, rep.m_prime_in, "->", rep.m_prime_out, f"coloured {rep.coloured_fraction:.2f}")
