# -*- coding=utf-8 -*-
