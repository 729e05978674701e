"""Scenario harness package"""