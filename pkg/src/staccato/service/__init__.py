"""HTTP service wrapping the detection pipeline."""

from staccato.service.app import create_app

__all__ = ["create_app"]
