# %% [markdown]
# ### Hyperentangled analyzer
#
# Two photons, each carrying path, spin and OAM qubits (D = 8). The reference
# circuit splits the 64 hyper Bell states into 15 classes.

# %%
from bellscope.bell import hyper_bell_state, hyper_label, named_hyper_labels
from bellscope.circuits import build_fig3_circuit, compose_circuit
from bellscope.detection import distinguishability_partition, pattern_name, requires_number_resolving
from bellscope.fock import evolve
from bellscope.reproduce import detector_map, fig4_reports

u, states, nr, th = fig4_reports()
print(f"number resolving: {nr.class_count} classes, sizes {nr.size_multiset()}")
print(f"threshold: {th.resolvable_class_count} resolvable, flagged {requires_number_resolving(nr, th)}")

# %% [markdown]
# Phi1 lands on eight cross-photon coincidences with equal weight.

# %%
mapping = detector_map()
for pattern, p in sorted(evolve(u, hyper_bell_state(hyper_label(1))).items()):
    print(f"{pattern_name(pattern, mapping):>10}  {p:.4f}")

# %% [markdown]
# ### Classes of the fifteen named states

# %%
named = named_hyper_labels()
sub = distinguishability_partition(u, [hyper_bell_state(h) for h in named], labels=[str(h) for h in named])
for k, members in enumerate(sub.classes):
    print(k, [sub.labels[i] for i in members])
