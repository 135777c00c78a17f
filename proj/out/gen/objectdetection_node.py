import rclpy
from rclpy.node import Node
from sensor_msgs.msg import PointCloud2
from sensor_msgs.msg import LaserScan
from ObjectDetection.ObjectDetection import ObjectDetection


class ObjectDetection_node(Node):

    def __init__(self):
        super().__init__('ObjectDetection_node')
        self.ObjectDetection = ObjectDetection()
        self.pointcloud = None
        self.pointcloud_subscriber = self.create_subscription(PointCloud2, "/carla/ego_vehicle/lidar", self.pointcloud_callback, qos_profile=10)
        self.scan_publisher = self.create_publisher(LaserScan, "/scan", qos_profile=10)
        self.timer = self.create_timer(1.0/20.0, self.execute)

    def pointcloud_callback(self, data):
        self.pointcloud = data.data

    def execute(self):
        if self.pointcloud is None:
            self.get_logger().warn("msg not received")
            return
        output = self.ObjectDetection.execute(pointcloud=self.pointcloud)
        scan_msg = LaserScan()
        scan_msg.range_min = output['scan']
        self.scan_publisher.publish(scan_msg)


def main(args=None):
    rclpy.init(args=args)
    node = ObjectDetection_node()
    rclpy.spin(node)
    node.destroy_node()
    rclpy.shutdown()


if __name__ == '__main__':
    main()
