from abc import ABC, abstractmethod

import numpy as np


class BaseForcingField(ABC):
    """
    环境强迫场 F: R^d -> R^d 及其前两阶导数
    points 的形状为 (N, d)
    """
    # declared sup of |F| over the ambient space
    sup_bound: float = 0.0

    @abstractmethod
    def value(self, points: np.ndarray) -> np.ndarray:
        """F(x), shape (N, d)"""
        pass

    @abstractmethod
    def jacobian(self, points: np.ndarray) -> np.ndarray:
        """J[n, i, j] = d_j F_i(x_n), shape (N, d, d)"""
        pass

    @abstractmethod
    def hessian(self, points: np.ndarray) -> np.ndarray:
        """H[n, i, j, k] = d_j d_k F_i(x_n), shape (N, d, d, d)"""
        pass
