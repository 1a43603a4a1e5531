# coding=utf-8
"""
Purpose:   [1] a machine may only need part of pytdnerf (a render box has no use for matplotlib),
               so dependencies are split into function groups and this module reports which
               groups are importable

Usage:     This code depends on None
           This code is compatible with python 3.8.x.

Examples:  RCheck().check()      # full list
           RCheck().check(5)     # plot group only

"""

import importlib
import logging

logger = logging.getLogger(__name__)

EXISTS = "Exists"
MISSING = "Need Install"


class RCheck():
    """
    check whether the modules a pytdnerf function group needs are installed
    """

    def __init__(self, print_try_log=False):
        """
        :param print_try_log: log every import attempt at debug level
        """
        self.print_try_log = print_try_log
        self.__full_list = [
            ["numpy", "numpy"],  # 0
            ["scipy", "scipy"],  # 1
            ["PIL", "pillow"],  # 2
            ["h5py", "h5py"],  # 3
            ["pandas", "pandas"],  # 4
            ["matplotlib", "matplotlib"],  # 5
            ["psutil", "psutil"],  # 6
            ["tqdm", "tqdm"],  # 7
            ["pytest", "pytest"],  # 8
        ]
        d = self.__full_list
        self.groups = [
            ("Full", d),  # 0
            ("Base", [d[0]]),  # 1
            ("Data", [d[0], d[2]]),  # 2
            ("Train", [d[0], d[1], d[4], d[7]]),  # 3
            ("Product", [d[0], d[3], d[4], d[2]]),  # 4
            ("Plot", [d[0], d[4], d[5]]),  # 5
            ("Computer", [d[6]]),  # 6
            ("Test", [d[8]]),  # 7
        ]

    def help(self):
        lines = ["which pytdnerf function group is usable on this machine:"]
        for num, (name, modules) in enumerate(self.groups):
            lines.append("    RCheck().check({}) for {} ({})".format(num, name, ", ".join(m[1] for m in modules)))
        return "\n".join(lines)

    def check_one_module_exists_by_try(self, model_name):
        result = False
        try:
            module = importlib.import_module(model_name)
            if self.print_try_log:
                logger.debug("import %s ok: %s", model_name, module)
            result = True
        except ImportError as e:
            if self.print_try_log:
                logger.debug("import %s failed: %s", model_name, e)
        return result

    def check_one_module(self, model_detail_list):
        """
        :param model_detail_list: [import name, distribution name]
        :return: [distribution name, Exists or Need Install]
        """
        is_exists = self.check_one_module_exists_by_try(model_detail_list[0])
        return [model_detail_list[1], EXISTS if is_exists else MISSING]

    def check(self, num=0):
        """
        :param num: group index, see help()
        :return: list of [name, status], False on a bad index
        """
        result = False
        if 0 <= num < len(self.groups):
            result = [self.check_one_module(m) for m in self.groups[num][1]]
        else:
            logger.error("no function group %s, see RCheck().help()", num)
        return result

    def is_ok(self, num=0):
        report = self.check(num)
        return bool(report) and all(status == EXISTS for _, status in report)
