"""Hamiltonians, Lindblad integration and position-lattice dynamics"""