# -*- coding: utf-8 -*-
__VERSION__ = "0.1.0"
import pytandem.model, pytandem.sojourn, pytandem.partial, pytandem.equilibrium, pytandem.simulator, pytandem.oracles
