"""Benchmark harness: campaigns, result stores, metrics and export."""
from .metrics import (CSV_HEADER, TARGET_LEVELS, EmptyStoreError, MetricsReport,
                      compute_metrics, compute_targets, export, latent_correlation_rows,
                      load_report)
from .store import CampaignConfig, ResultStore, run_campaign, write_histories

__all__ = ["CSV_HEADER", "TARGET_LEVELS", "CampaignConfig", "EmptyStoreError", "MetricsReport",
           "ResultStore", "compute_metrics", "compute_targets", "export",
           "latent_correlation_rows", "load_report", "run_campaign", "write_histories"]
