# Three-state chain with a genuinely reachable error state; refinement finds
# the concrete counterexample immediately.
states 3
label 0 1
label 1 2
label 2 3
edge 0 1
edge 1 2
init 0
error 2
block B0 0
block B1 1
block B2 2
