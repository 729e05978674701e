"""Utilities package"""