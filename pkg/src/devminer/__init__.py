"""devminer: repository-history mining, development-activity metrics,
anti-pattern flagging, and defect prediction for IaC scripts."""

__version__ = "0.1.0"
