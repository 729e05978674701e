"""Worked resource estimates"""