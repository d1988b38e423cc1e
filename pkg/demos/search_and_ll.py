# %% [markdown]
# ### Searching for a good two-qubit analyzer
#
# Random-restart search over unitaries, then a check of the pairwise
# distinguishability criterion against the exact outcome supports.

# %%
import itertools

from bellscope.bell import bell_basis, bell_labels
from bellscope.criteria import ll_pairwise_distinguishable, min_signature_rank
from bellscope.detection import outcome_support
from bellscope.search import SearchConfig, bound_audit, maximize_classes

res = maximize_classes(SearchConfig(2, 2, budget=500, seed=0, target=3))
print(f"best {res.best_classes} classes in {res.evaluations} evaluations, group {res.group.group}")
print("classes:", [[str(bell_labels(2, 2)[i]) for i in c] for c in res.classes])

# %% [markdown]
# The LL verdict must agree with disjointness of the supports for every pair.

# %%
u = res.best_unitary
states = bell_basis(2, 2)
for i, j in itertools.combinations(range(len(states)), 2):
    ll = ll_pairwise_distinguishable(u, states[i], states[j])
    a = set(outcome_support(u, states[i]).probabilities)
    b = set(outcome_support(u, states[j]).probabilities)
    print(f"{i} vs {j}: LL {ll}, disjoint supports {not a & b}")

# %% [markdown]
# ### Signature rank and a Haar audit

# %%
print("min signature rank:", min_signature_rank(u, 2))
audit = bound_audit(3, 2, samples=50, seed=1)
print(f"(3,2) audit: G1 {audit.g1_count}/50, max classes {audit.max_g1_classes} <= {audit.bound}")
