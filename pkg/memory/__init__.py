from memory.cluster_memory import ClusterMemory, init_memory

__all__ = ["ClusterMemory", "init_memory"]
