"""Shaft power prediction with cross-frequency transfer learning.

Train a dense network on a vessel's high-frequency sensor data, then
adapt it to other vessels' daily noon reports by freezing the feature
layers and fine-tuning only the output layer.
"""

__version__ = "0.1.0"
