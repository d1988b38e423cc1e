# %% [markdown]
# ### Limits and the identity scheme
#
# Class counts for linear circuits without ancillas, and what the plain
# identity circuit (every photon read out in its own detector block) achieves.

# %%
from bellscope.bell import bell_basis, bell_labels
from bellscope.circuits import build_fig1_circuit, classify_group, compose_circuit
from bellscope.criteria import limits
from bellscope.detection import coincidence_matrix, distinguishability_partition

for n in (2, 3, 4):
    for D in (2, 3, 4):
        lim = limits(n, D)
        print(f"n={n} D={D}  N1={lim.n1:2d}  N2>={lim.n2_lower:2d}  CC={lim.cc_bits:.3f} bits")

# %% [markdown]
# The identity circuit keeps every photon in its own block, so the clicks of
# the last photon are fixed by the others. That puts it in G2.

# %%
for n, D in [(2, 2), (3, 2), (4, 2), (2, 8)]:
    u = compose_circuit(build_fig1_circuit(n, D))
    report = distinguishability_partition(u, bell_basis(n, D))
    tag = classify_group(u, n, D)
    print(f"({n},{D}) {tag.group}: {report.class_count} classes, sizes {report.size_multiset()}")

# %% [markdown]
# ### Coincidence table for two qubits

# %%
u = compose_circuit(build_fig1_circuit(2, 2))
report = distinguishability_partition(u, bell_basis(2, 2), labels=[str(x) for x in bell_labels(2, 2)])
print(coincidence_matrix(report).to_text())
