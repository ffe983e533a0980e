"""Adaptive feature interpolation for low-shot GAN training."""
