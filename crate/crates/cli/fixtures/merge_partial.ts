# The merge demo system with a coarser partition that joins only the two
# middle blocks; its walk through [7] is spurious and has a spurious finer
# preimage through [4,5].
states 9
label 0 1
label 1 2
label 2 3
label 3 4
label 4 5
label 5 6
label 6 7
label 7 8
label 8 9
edge 0 1
edge 0 3
edge 1 5
edge 2 6
edge 3 5
edge 4 6
edge 5 7
edge 6 8
block C0 0
block C1 1 2 3 4
block C2 5
block C3 6
block C4 7 8
