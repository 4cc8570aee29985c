"""
运行产物写出工具

所有产物都携带完整的运行配置和随机种子，保证结果可复现、可审计
"""

import os
import csv
import json

from utils.logger import ensure_dir


def _prepare(path):
    ensure_dir(os.path.dirname(os.path.abspath(path)))


def config_comment(config):
    """
    生成写在CSV首行的配置注释
    
    参数:
        config: 可JSON序列化的配置字典
        
    返回:
        str: 以 "# config: " 开头的单行文本
    """
    return "# config: " + json.dumps(config, ensure_ascii=False, sort_keys=True)


def write_csv(path, header, rows, config=None):
    """
    写出CSV文件
    
    参数:
        path: 文件路径
        header: 列名列表
        rows: 行数据（序列的序列）
        config: 若提供，首行写入配置注释
        
    返回:
        str: 文件路径
    """
    _prepare(path)
    with open(path, "w", encoding="utf-8", newline="") as f:
        if config is not None:
            f.write(config_comment(config) + "\n")
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow(row)
    return path


def write_json(path, payload):
    """
    写出JSON文件（键顺序保持插入顺序，便于逐字节比较）
    """
    _prepare(path)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, ensure_ascii=False, indent=4)
        f.write("\n")
    return path


def write_jsonl(path, records):
    """
    写出JSON Lines文件，每条记录一行
    """
    _prepare(path)
    with open(path, "w", encoding="utf-8") as f:
        for record in records:
            f.write(json.dumps(record, ensure_ascii=False) + "\n")
    return path
