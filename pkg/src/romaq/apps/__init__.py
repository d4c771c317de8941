from romaq.apps import normapprox, portfolio, regression, reports

__all__ = ["normapprox", "portfolio", "regression", "reports"]
