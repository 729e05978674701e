"""Measurement chain and information transitions"""