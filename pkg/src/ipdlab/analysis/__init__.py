"""Feature extraction, correlations, clustering and forest importances."""

from .clustering import THRESHOLDS, cluster_threshold, kmeans, kmeans_silhouette, silhouette_samples
from .correlations import correlation_matrix, correlation_table, correlations, pearson
from .features import (FEATURES, FeatureVector, TournamentContext, compute_features, feature_table, impute,
                       memory_usage)
from .forest import ForestFitError, ForestModel, fit_forest, forest_fit, forest_importance, forest_score
from .zd import ZdFit, fit_extortionate, sse_to_zd
