# Seven-state system for refinement demos: the abstract counterexample
# through the middle block is spurious and splits differently under the two
# refinement strategies.
states 7
label 0 1
label 1 2
label 2 3
label 3 4
label 4 5
label 5 6
label 6 7
edge 0 4
edge 1 3
edge 1 4
edge 2 5
edge 3 6
edge 4 6
init 0 1
error 5
block B0 0
block B1 1
block B2 2 3 4
block B3 5
block B4 6
