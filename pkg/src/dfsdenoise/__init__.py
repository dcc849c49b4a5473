"""Linear-time denoising of graph signals through depth-first-search chains.

The DFS fused lasso runs an exact 1d fused lasso along the node order visited
by a depth-first search, then maps the fit back to the graph. The package also
carries the comparison estimators (Laplacian smoothing, spanning-tree
wavelets, DFS Potts), synthetic signal generators and a benchmark harness.
"""
from .graph import (Graph, GraphError, Tree, cut_metric, dfs_spanning_tree, from_edges, grid_graph,
                    largest_connected_component, load_edge_list, maximum_spanning_tree, path_graph,
                    piece_count, random_connected_graph, random_geometric_graph, random_spanning_tree,
                    total_variation, tree_incidence_inverse, tree_partition)
from .chain import (ChainOrder, dfs_order, induced_chain_weights, random_dfs_order, snake_orders,
                    verify_embedding)
from .fl1d import FL1DProblem, FL1DSolution, fl1d, kkt_residual, solve_fl1d, solve_fl1d_oracle
from .potts import Potts1DProblem, dfs_potts, solve_potts1d
from .denoisers import (DenoiseResult, dfs_fused_lasso, laplacian_smoothing, multi_dfs_average,
                        wavelet_denoise)
from .wavelets import WaveletBasis, build_tree_wavelets
from .signals import (SignalSpec, add_noise, grid_piecewise_signal, random_tree, seeded_partition_signal,
                      tree_piecewise_signal)

__version__ = "0.1.0"
