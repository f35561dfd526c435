"""scikit-learn estimator facade over the iterative subspace learner."""

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .directions import DirectionFinderConfig
from .learner import ArrayBatcher, LearnerConfig, learn
from .models import LabeledDataset


class MultiIndexClassifier(BaseEstimator, ClassifierMixin):
    """Iterative subspace discovery plus a piecewise-constant hypothesis.

    The training set is carved into disjoint sequential batches: one for the
    trace, one per discovery iteration, and one for the final fit, mirroring
    the fresh-sample contract of the underlying algorithm.

    Parameters
    ----------
    mode : {"mlc-agnostic", "mim-agnostic", "mim-rcn"}
        Which direction finder and loop schedule to run.
    k_hint : int
        Upper bound on the hidden subspace dimension.
    n_per_iter : int or None
        Samples per batch; None splits the data into ``2 * k_hint + 3``
        equal batches.
    T : int or None
        Iteration cap; None derives it from the data size (agnostic modes)
        or uses ``2 * k_hint`` (RCN mode).
    degree : int
        Regression degree for the mim finders.
    cube_eps, final_eps, sigma, t_eig : float
        Partition widths and eigenvalue thresholds.
    random_state : int
        Seed recorded in the learner config (the data split is
        deterministic, so this only matters for downstream reuse).

    Attributes
    ----------
    classes_ : ndarray
        Sorted class labels seen in fit.
    classifier_ : PiecewiseConstantClassifier
        The fitted hypothesis.
    trace_ : TrainTrace
        Per-iteration diagnostics.
    subspace_dim_ : int
        Dimension of the discovered subspace.

    Examples
    --------
    >>> import numpy as np
    >>> rng = np.random.default_rng(0)
    >>> X = rng.standard_normal((30000, 4))
    >>> y = (X[:, 0] > 0).astype(int)
    >>> clf = MultiIndexClassifier(k_hint=1).fit(X, y)
    >>> clf.score(X, y) > 0.9
    True
    """

    def __init__(
        self,
        mode="mlc-agnostic",
        k_hint=2,
        n_per_iter=None,
        T=None,
        degree=1,
        cube_eps=0.25,
        final_eps=None,
        sigma=0.05,
        t_eig=None,
        random_state=0,
    ):
        self.mode = mode
        self.k_hint = k_hint
        self.n_per_iter = n_per_iter
        self.T = T
        self.degree = degree
        self.cube_eps = cube_eps
        self.final_eps = final_eps
        self.sigma = sigma
        self.t_eig = t_eig
        self.random_state = random_state

    def _learner_config(self, n_samples):
        n_batches = 2 * self.k_hint + 3
        n_per_iter = self.n_per_iter if self.n_per_iter is not None else max(1, n_samples // n_batches)
        available = n_samples // n_per_iter - 2  # trace batch + final batch
        if available < 1:
            raise ValueError(
                f"not enough samples ({n_samples}) for batches of {n_per_iter}; "
                "lower n_per_iter or provide more data"
            )
        t_cap = self.T if self.T is not None else available
        finder = DirectionFinderConfig(
            cube_eps=self.cube_eps,
            sigma=self.sigma,
            m=self.degree,
            t_eig=self.t_eig,
            k_hint=self.k_hint,
        )
        if self.mode == "mim-rcn":
            t_cap = None  # schedule fixed at 2 * k_hint by the learner
        return LearnerConfig(
            mode=self.mode,
            T=t_cap,
            n_per_iter=n_per_iter,
            finder=finder,
            final_eps=self.final_eps,
            seed=self.random_state,
        )

    def fit(self, X, y):
        X, y = check_X_y(X, y)
        self.classes_, encoded = np.unique(y, return_inverse=True)
        if self.classes_.shape[0] < 2:
            raise ValueError("need at least 2 classes")
        cfg = self._learner_config(X.shape[0])
        dataset = LabeledDataset(X, encoded, tuple(range(self.classes_.shape[0])))
        classifier, trace = learn(ArrayBatcher(dataset, cfg.n_per_iter), cfg)
        self.classifier_ = classifier
        self.trace_ = trace
        self.subspace_dim_ = trace.k_final
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "classifier_")
        X = check_array(X)
        encoded = np.asarray(self.classifier_.predict(X))
        return self.classes_[encoded]
