# Nine-state system whose partition has two pairs of blocks with identical
# abstract pre/post behavior; the partition kernel merges both pairs.
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
block B0 0
block B1 1 2
block B2 3 4
block B3 5
block B4 6
block B5 7 8
