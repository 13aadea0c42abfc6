"""Key-invariant GNN workbench: graphs, feature expressions, logics,
compilers between them, equivalence machinery and oracle harnesses."""

__version__ = "0.1.0"
